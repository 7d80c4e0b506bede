//! Circuit intermediate representation.
//!
//! A circuit is an ordered gate list over `n` work qubits together with the
//! initial work-register state. Qubit 0 is the output qubit and the most
//! significant bit of a work-register basis index.
//!
//! Text format (one statement per line, `#` starts a comment):
//!
//! ```text
//! qubits 2
//! input 11
//! gate CNOT 0 1
//! gate U1 0 0.70710678 0 0.70710678 0 0.70710678 0 -0.70710678 0
//! gate W 1 0.785398 Z
//! gate ID 0
//! ```

use std::fmt;
use std::fmt::Write as _;

use crate::compiler::Backend;
use crate::error::{Error, Result};
use crate::linalg::{
    basis_phase_matrix, c, unitarity_defect, Mat2, C64, IDENTITY2, ONE, ZERO,
};

/// Tolerance on `max |U^dagger U - I|` for gate matrices.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Identity {
        target: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    SingleQubit {
        target: usize,
        unitary: Mat2,
    },
    /// `W = B (|0><0| + e^{i theta} |1><1|) B^dagger`
    BasisPhase {
        target: usize,
        theta: f64,
        basis: Mat2,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Identity { target }
            | Gate::SingleQubit { target, .. }
            | Gate::BasisPhase { target, .. } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Identity { .. } => "ID",
            Gate::Cnot { .. } => "CNOT",
            Gate::SingleQubit { .. } => "U1",
            Gate::BasisPhase { .. } => "W",
        }
    }

    /// Whether the 2-local backends realize this gate with a railroad switch.
    pub fn is_switch(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::BasisPhase { .. })
    }

    /// The single-qubit matrix of a one-qubit gate (`None` for CNOT).
    pub fn single_qubit_matrix(&self) -> Option<Mat2> {
        match self {
            Gate::Identity { .. } => Some(IDENTITY2),
            Gate::SingleQubit { unitary, .. } => Some(*unitary),
            Gate::BasisPhase { theta, basis, .. } => Some(basis_phase_matrix(*theta, basis)),
            Gate::Cnot { .. } => None,
        }
    }

    /// Dense matrix over `self.qubits()` (first listed qubit most significant).
    pub fn local_matrix(&self) -> Vec<C64> {
        match self.single_qubit_matrix() {
            Some(m) => vec![m[0][0], m[0][1], m[1][0], m[1][1]],
            None => {
                // (control, target): |10> <-> |11>
                let mut m = vec![ZERO; 16];
                m[0] = ONE;
                m[5] = ONE;
                m[2 * 4 + 3] = ONE;
                m[3 * 4 + 2] = ONE;
                m
            }
        }
    }

    fn check(&self, n: usize) -> std::result::Result<(), String> {
        for q in self.qubits() {
            if q >= n {
                return Err(format!("qubit index {q} out of range (circuit has {n} qubits)"));
            }
        }
        match self {
            Gate::Cnot { control, target } if control == target => {
                Err(format!("CNOT control equals target ({control})"))
            }
            Gate::SingleQubit { unitary, .. } => {
                let d = unitarity_defect(unitary);
                if d > UNITARITY_TOL {
                    Err(format!("gate matrix is not unitary (defect {d:.3e})"))
                } else {
                    Ok(())
                }
            }
            Gate::BasisPhase { theta, basis, .. } => {
                if !theta.is_finite() {
                    return Err("phase angle is not finite".into());
                }
                let d = unitarity_defect(basis);
                if d > UNITARITY_TOL {
                    Err(format!("basis matrix is not unitary (defect {d:.3e})"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Initial state of the work register.
#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    /// Computational basis string, qubit 0 first.
    Bits(Vec<bool>),
    /// Explicit unit-norm amplitudes over the `2^n` work basis.
    Amplitudes(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    input: Input,
    useful_length: usize,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>, input: Input) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCircuit("need at least one qubit".into()));
        }
        if gates.is_empty() {
            return Err(Error::InvalidCircuit("need at least one gate".into()));
        }
        for (i, g) in gates.iter().enumerate() {
            g.check(n)
                .map_err(|m| Error::InvalidCircuit(format!("gate {}: {m}", i + 1)))?;
        }
        check_input(n, &input)?;
        let useful_length = gates.len();
        Ok(Circuit {
            n,
            gates,
            input,
            useful_length,
        })
    }

    pub fn with_input(mut self, input: Input) -> Result<Self> {
        check_input(self.n, &input)?;
        self.input = input;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of gates `L`.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn input(&self) -> &Input {
        &self.input
    }

    /// Length of the circuit before identity padding.
    pub fn useful_length(&self) -> usize {
        self.useful_length
    }

    pub fn switch_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_switch()).count()
    }

    /// The initial work-register vector `|phi_0>`.
    pub fn initial_state(&self) -> Vec<C64> {
        match &self.input {
            Input::Amplitudes(a) => a.clone(),
            Input::Bits(bits) => {
                let mut v = vec![ZERO; 1 << self.n];
                v[bits_to_index(bits)] = ONE;
                v
            }
        }
    }

    /// Serializes to the line-oriented text format.
    ///
    /// Explicit amplitude inputs have no text form and are written as the
    /// all-zero string.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qubits {}", self.n);
        let bits = match &self.input {
            Input::Bits(b) => b.iter().map(|&x| if x { '1' } else { '0' }).collect(),
            Input::Amplitudes(_) => "0".repeat(self.n),
        };
        let _ = writeln!(s, "input {bits}");
        if self.useful_length != self.gates.len() {
            let _ = writeln!(s, "useful {}", self.useful_length);
        }
        for g in &self.gates {
            match g {
                Gate::Identity { target } => {
                    let _ = writeln!(s, "gate ID {target}");
                }
                Gate::Cnot { control, target } => {
                    let _ = writeln!(s, "gate CNOT {control} {target}");
                }
                Gate::SingleQubit { target, unitary } => {
                    let _ = writeln!(s, "gate U1 {target} {}", fmt_mat2(unitary));
                }
                Gate::BasisPhase {
                    target,
                    theta,
                    basis,
                } => {
                    if *basis == IDENTITY2 {
                        let _ = writeln!(s, "gate W {target} {theta:?} Z");
                    } else {
                        let _ = writeln!(s, "gate W {target} {theta:?} {}", fmt_mat2(basis));
                    }
                }
            }
        }
        s
    }
}

fn check_input(n: usize, input: &Input) -> Result<()> {
    match input {
        Input::Bits(b) if b.len() != n => Err(Error::InvalidCircuit(format!(
            "input has {} bits, circuit has {n} qubits",
            b.len()
        ))),
        Input::Amplitudes(a) if a.len() != 1 << n => Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: a.len(),
        }),
        Input::Amplitudes(a) => {
            let norm = crate::linalg::norm(a);
            if (norm - 1.0).abs() > 1e-12 {
                Err(Error::InvalidCircuit(format!("input state has norm {norm}")))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn fmt_mat2(m: &Mat2) -> String {
    let mut parts = Vec::with_capacity(8);
    for row in m {
        for z in row {
            parts.push(format!("{:?} {:?}", z.re, z.im));
        }
    }
    parts.join(" ")
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses the circuit text format. Errors carry the 1-based line number.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut n: Option<usize> = None;
    let mut input: Option<Vec<bool>> = None;
    let mut useful: Option<usize> = None;
    let mut gates = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line, msg };
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks[0] {
            "qubits" => {
                if n.is_some() {
                    return Err(err("duplicate `qubits` statement".into()));
                }
                if toks.len() != 2 {
                    return Err(err("expected `qubits <n>`".into()));
                }
                let v: usize = toks[1]
                    .parse()
                    .map_err(|_| err(format!("bad qubit count `{}`", toks[1])))?;
                if v == 0 {
                    return Err(err("qubit count must be positive".into()));
                }
                n = Some(v);
            }
            "input" => {
                if toks.len() != 2 {
                    return Err(err("expected `input <bitstring>`".into()));
                }
                let bits = toks[1]
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(err(format!("bad input bit `{other}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                input = Some(bits);
            }
            "useful" => {
                if toks.len() != 2 {
                    return Err(err("expected `useful <length>`".into()));
                }
                useful = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(format!("bad length `{}`", toks[1])))?,
                );
            }
            "gate" => {
                let nq = n.ok_or_else(|| err("`gate` before `qubits`".into()))?;
                let gate = parse_gate(&toks[1..]).map_err(err)?;
                gate.check(nq).map_err(err)?;
                gates.push(gate);
            }
            other => return Err(err(format!("unknown statement `{other}`"))),
        }
    }

    let n = n.ok_or(Error::Parse {
        line: last_line.max(1),
        msg: "missing `qubits` statement".into(),
    })?;
    let bits = input.unwrap_or_else(|| vec![false; n]);
    if bits.len() != n {
        return Err(Error::Parse {
            line: last_line.max(1),
            msg: format!("input has {} bits, circuit has {n} qubits", bits.len()),
        });
    }
    let mut circuit = Circuit::new(n, gates, Input::Bits(bits)).map_err(|e| Error::Parse {
        line: last_line.max(1),
        msg: e.to_string(),
    })?;
    if let Some(u) = useful {
        if u == 0 || u > circuit.len() {
            return Err(Error::Parse {
                line: last_line.max(1),
                msg: format!("useful length {u} outside 1..={}", circuit.len()),
            });
        }
        circuit.useful_length = u;
    }
    Ok(circuit)
}

fn parse_index(tok: &str) -> std::result::Result<usize, String> {
    tok.parse().map_err(|_| format!("bad qubit index `{tok}`"))
}

fn parse_float(tok: &str) -> std::result::Result<f64, String> {
    let v: f64 = tok.parse().map_err(|_| format!("bad number `{tok}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite number `{tok}`"))
    }
}

fn parse_mat2(toks: &[&str]) -> std::result::Result<Mat2, String> {
    if toks.len() != 8 {
        return Err(format!("expected 8 matrix entries, got {}", toks.len()));
    }
    let v = toks
        .iter()
        .map(|t| parse_float(t))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok([
        [c(v[0], v[1]), c(v[2], v[3])],
        [c(v[4], v[5]), c(v[6], v[7])],
    ])
}

fn parse_gate(toks: &[&str]) -> std::result::Result<Gate, String> {
    let (kind, args) = toks
        .split_first()
        .ok_or_else(|| "missing gate name".to_string())?;
    match *kind {
        "ID" => match args {
            [q] => Ok(Gate::Identity {
                target: parse_index(q)?,
            }),
            _ => Err("expected `gate ID <q>`".into()),
        },
        "CNOT" => match args {
            [a, b] => Ok(Gate::Cnot {
                control: parse_index(a)?,
                target: parse_index(b)?,
            }),
            _ => Err("expected `gate CNOT <control> <target>`".into()),
        },
        "U1" => {
            if args.len() != 9 {
                return Err("expected `gate U1 <q> <8 floats>`".into());
            }
            Ok(Gate::SingleQubit {
                target: parse_index(args[0])?,
                unitary: parse_mat2(&args[1..])?,
            })
        }
        "W" => {
            if args.len() < 3 {
                return Err("expected `gate W <q> <theta> <8 floats | Z>`".into());
            }
            let target = parse_index(args[0])?;
            let theta = parse_float(args[1])?;
            let basis = match &args[2..] {
                ["Z"] => IDENTITY2,
                rest => parse_mat2(rest)?,
            };
            Ok(Gate::BasisPhase {
                target,
                theta,
                basis,
            })
        }
        other => Err(format!("unknown gate `{other}`")),
    }
}

/// A gate a backend cannot lower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// 1-based gate position.
    pub gate: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gate {}: {}", self.gate, self.message)
    }
}

/// Lists the gates `backend` has no construction for. Empty means supported.
pub fn validate_for_backend(c: &Circuit, backend: Backend) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, g) in c.gates().iter().enumerate() {
        if let (Gate::SingleQubit { .. }, Backend::Q23 | Backend::Q22) = (g, backend) {
            out.push(Violation {
                gate: i + 1,
                message: "no 2-local gadget for general 1-qubit unitary".into(),
            });
        }
    }
    out
}

pub fn ensure_supported(c: &Circuit, backend: Backend) -> Result<()> {
    let violations = validate_for_backend(c, backend);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation {
            backend,
            violations,
        })
    }
}

/// Appends `(factor - 1) * L` identity gates on qubit 0. The padded circuit
/// keeps the original useful length.
pub fn pad_with_identities(c: &Circuit, factor: usize) -> Result<Circuit> {
    if factor == 0 {
        return Err(Error::InvalidArgument("padding factor must be >= 1".into()));
    }
    let mut out = c.clone();
    let extra = (factor - 1) * c.len();
    out.gates
        .extend(std::iter::repeat_n(Gate::Identity { target: 0 }, extra));
    Ok(out)
}

/// Applies one gate in place to a work-register vector.
pub fn apply_gate(gate: &Gate, n: usize, psi: &mut [C64]) {
    match gate {
        Gate::Identity { .. } => {}
        Gate::Cnot { control, target } => {
            let cbit = 1usize << (n - 1 - control);
            let tbit = 1usize << (n - 1 - target);
            for i in 0..psi.len() {
                if i & cbit != 0 && i & tbit == 0 {
                    psi.swap(i, i | tbit);
                }
            }
        }
        g => {
            let m = g.single_qubit_matrix().expect("one-qubit gate");
            let target = g.qubits()[0];
            apply_mat2(&m, n, target, psi);
        }
    }
}

pub(crate) fn apply_mat2(m: &Mat2, n: usize, target: usize, psi: &mut [C64]) {
    let bit = 1usize << (n - 1 - target);
    for i in 0..psi.len() {
        if i & bit == 0 {
            let a = psi[i];
            let b = psi[i | bit];
            psi[i] = m[0][0] * a + m[0][1] * b;
            psi[i | bit] = m[1][0] * a + m[1][1] * b;
        }
    }
}

/// `U_t ... U_1 psi`; `t = 0` returns `psi` unchanged.
pub fn apply_circuit_prefix(c: &Circuit, t: usize, psi: &[C64]) -> Result<Vec<C64>> {
    let dim = 1usize << c.n_qubits();
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: psi.len(),
        });
    }
    if t > c.len() {
        return Err(Error::InvalidArgument(format!(
            "prefix length {t} exceeds circuit length {}",
            c.len()
        )));
    }
    let mut out = psi.to_vec();
    for g in &c.gates()[..t] {
        apply_gate(g, c.n_qubits(), &mut out);
    }
    Ok(out)
}
