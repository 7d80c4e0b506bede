//! Circuit-to-Hamiltonian lowering.
//!
//! Every backend lays out the register as work qubits `q0..q{n-1}`, then the
//! pulse-clock stations `c_0..c_L`, then gadget sites in gate order. A train
//! moving between two clock stops is a hop term `V (x) |to><from| + h.c.`
//! over the work qubits of `V` followed by the clock sites involved.
//!
//! * `F4`: one hop per gate carrying the gate itself (arity <= 4).
//! * `S3`: CNOTs become a 3-local railroad switch with stops `u1,u2,l1,l2`.
//! * `Q23`: CNOTs and basis-phase gates become a qubit-qutrit switch; each
//!   track is `u1 (qutrit), u2, u3 (qutrit), u4, u5 (qutrit)`, 9 hops.
//! * `Q22`: the `Q23` switch with every qutrit replaced by a qubit pair
//!   (`O -> |00>`, `A -> |+>`, `B -> |->`), except the middle stop of a
//!   basis-phase switch, which is pulse encoded as `u3A, u3B`.
//!
//! Qutrit digits are `O = 0, A = 1, B = 2`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{ensure_supported, Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_projector, c, dagger, kron, mat2_flat, Mat2, C64, ONE, PAULI_X, PAULI_Z, PROJ0, PROJ1,
    ZERO,
};
use crate::model::{complex_pair, Register, SiteRole, Term, TermList};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// 4-local Feynman construction with a pulse clock.
    F4,
    /// 3-local railroad switch.
    S3,
    /// 2-local qubit-qutrit switch.
    Q23,
    /// 2-local qubit-qubit switch with entangled clock encoding.
    Q22,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::F4, Backend::S3, Backend::Q23, Backend::Q22];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::F4 => "f4",
            Backend::S3 => "s3",
            Backend::Q23 => "q23",
            Backend::Q22 => "q22",
        }
    }

    /// Whether CNOT and basis-phase gates are realized as two-track combs.
    pub fn uses_comb(self) -> bool {
        matches!(self, Backend::Q23 | Backend::Q22)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f4" => Ok(Backend::F4),
            "s3" => Ok(Backend::S3),
            "q23" => Ok(Backend::Q23),
            "q22" => Ok(Backend::Q22),
            other => Err(Error::InvalidArgument(format!(
                "unknown backend `{other}` (expected f4, s3, q23 or q22)"
            ))),
        }
    }
}

/// One clock-register configuration: the nonzero site digits (every other
/// clock site empty) with its amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub assign: BTreeMap<usize, u8>,
    #[serde(with = "complex_pair")]
    pub amp: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockLabel {
    pub label: String,
    pub configs: Vec<ClockConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockMap {
    /// Clock labels in path order.
    pub labels: Vec<ClockLabel>,
    pub useful_length: usize,
    /// Station sites `c_t` with `t > useful_length`.
    pub success_stations: Vec<usize>,
}

impl ClockMap {
    pub fn get(&self, label: &str) -> Option<&ClockLabel> {
        self.labels.iter().find(|l| l.label == label)
    }
}

pub fn station_label(t: usize) -> String {
    format!("t={t}")
}

/// Clock label of a gadget stop, e.g. `g2:u3A`.
pub fn gadget_label(gate: usize, stop: &str) -> String {
    format!("g{gate}:{stop}")
}

/// Output of a backend: the Hamiltonian (with its register) and clock map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compilation {
    pub backend: Backend,
    #[serde(flatten)]
    pub hamiltonian: TermList,
    pub clock_map: ClockMap,
}

impl Compilation {
    pub fn register(&self) -> &Register {
        &self.hamiltonian.register
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Compilation = serde_json::from_str(text)?;
        c.hamiltonian.validate()?;
        Ok(c)
    }
}

pub fn compile(c: &Circuit, backend: Backend) -> Result<Compilation> {
    match backend {
        Backend::F4 => compile_feynman4(c),
        Backend::S3 => compile_switch3(c),
        Backend::Q23 => compile_qutrit2(c),
        Backend::Q22 => compile_qubit2(c),
    }
}

pub fn compile_feynman4(c: &Circuit) -> Result<Compilation> {
    ensure_supported(c, Backend::F4)?;
    let mut b = Builder::new(c);
    for (i, gate) in c.gates().iter().enumerate() {
        b.feynman_hop(i + 1, gate)?;
    }
    Ok(b.finish(Backend::F4))
}

pub fn compile_switch3(c: &Circuit) -> Result<Compilation> {
    ensure_supported(c, Backend::S3)?;
    let mut b = Builder::new(c);
    for (i, gate) in c.gates().iter().enumerate() {
        let t = i + 1;
        match *gate {
            Gate::Cnot { control, target } => b.switch3(t, control, target)?,
            _ => b.feynman_hop(t, gate)?,
        }
    }
    Ok(b.finish(Backend::S3))
}

pub fn compile_qutrit2(c: &Circuit) -> Result<Compilation> {
    ensure_supported(c, Backend::Q23)?;
    compile_comb(c, Backend::Q23)
}

pub fn compile_qubit2(c: &Circuit) -> Result<Compilation> {
    ensure_supported(c, Backend::Q22)?;
    compile_comb(c, Backend::Q22)
}

fn compile_comb(c: &Circuit, backend: Backend) -> Result<Compilation> {
    let mut b = Builder::new(c);
    for (i, gate) in c.gates().iter().enumerate() {
        let t = i + 1;
        match gate.switch_tracks() {
            Some(tracks) => {
                for track in &tracks {
                    b.comb_track(t, track, backend)?;
                }
                b.station(t);
            }
            None => b.feynman_hop(t, gate)?,
        }
    }
    Ok(b.finish(backend))
}

/// Operator on work qubits (first listed qubit most significant).
#[derive(Clone, Debug)]
struct WorkOp {
    qubits: Vec<usize>,
    matrix: Vec<C64>,
}

impl WorkOp {
    fn single(q: usize, m: &Mat2) -> Self {
        WorkOp {
            qubits: vec![q],
            matrix: mat2_flat(m),
        }
    }
}

/// Operation performed on the middle internal hop of a track.
#[derive(Clone, Debug)]
enum Middle {
    Flip(usize),
    Plain,
    Phase(f64),
}

/// One track of a 2-local switch.
#[derive(Clone, Debug)]
pub(crate) struct Track {
    pub upper: bool,
    pub master: usize,
    /// Projector on the train master selecting this track.
    pub projector: Mat2,
    middle: Middle,
}

impl Track {
    fn prefix(&self) -> char {
        if self.upper {
            'u'
        } else {
            'l'
        }
    }
}

impl Gate {
    /// Upper and lower tracks of the switch realizing this gate, if any.
    pub(crate) fn switch_tracks(&self) -> Option<[Track; 2]> {
        match *self {
            Gate::Cnot { control, target } => Some([
                Track {
                    upper: true,
                    master: control,
                    projector: PROJ1,
                    middle: Middle::Flip(target),
                },
                Track {
                    upper: false,
                    master: control,
                    projector: PROJ0,
                    middle: Middle::Plain,
                },
            ]),
            Gate::BasisPhase {
                target,
                theta,
                basis,
            } => Some([
                Track {
                    upper: true,
                    master: target,
                    projector: basis_projector(&basis, 1),
                    middle: Middle::Phase(theta),
                },
                Track {
                    upper: false,
                    master: target,
                    projector: basis_projector(&basis, 0),
                    middle: Middle::Plain,
                },
            ]),
            _ => None,
        }
    }
}

/// Where a clock stop physically lives.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Stop {
    /// One site holding `digit` (qubit stations use digit 1, qutrits 1 or 2).
    Level { site: usize, digit: u8 },
    /// Qubit pair encoding a qutrit level: A as |+>, B as |->.
    Entangled { first: usize, second: usize, b: bool },
}

impl Stop {
    fn configs(&self) -> Vec<ClockConfig> {
        match *self {
            Stop::Level { site, digit } => vec![ClockConfig {
                assign: BTreeMap::from([(site, digit)]),
                amp: ONE,
            }],
            Stop::Entangled { first, second, b } => {
                let sign = if b { -1.0 } else { 1.0 };
                vec![
                    ClockConfig {
                        assign: BTreeMap::from([(second, 1)]),
                        amp: c(FRAC_1_SQRT_2, 0.0),
                    },
                    ClockConfig {
                        assign: BTreeMap::from([(first, 1)]),
                        amp: c(sign * FRAC_1_SQRT_2, 0.0),
                    },
                ]
            }
        }
    }
}

struct Builder<'c> {
    circuit: &'c Circuit,
    terms: TermList,
    labels: Vec<ClockLabel>,
    stations: Vec<usize>,
}

impl<'c> Builder<'c> {
    fn new(circuit: &'c Circuit) -> Self {
        let mut reg = Register::new();
        for q in 0..circuit.n_qubits() {
            reg.push(2, SiteRole::Work, format!("q{q}"));
        }
        let stations = (0..=circuit.len())
            .map(|t| reg.push(2, SiteRole::Station, format!("c_{t}")))
            .collect();
        let mut b = Builder {
            circuit,
            terms: TermList::new(reg),
            labels: Vec::new(),
            stations,
        };
        b.station(0);
        b
    }

    fn station(&mut self, t: usize) {
        let stop = Stop::Level {
            site: self.stations[t],
            digit: 1,
        };
        self.labels.push(ClockLabel {
            label: station_label(t),
            configs: stop.configs(),
        });
    }

    fn station_stop(&self, t: usize) -> Stop {
        Stop::Level {
            site: self.stations[t],
            digit: 1,
        }
    }

    fn add_site(&mut self, dim: usize, role: SiteRole, label: String) -> usize {
        self.terms.register.push(dim, role, label)
    }

    fn finish(self, backend: Backend) -> Compilation {
        let useful = self.circuit.useful_length();
        Compilation {
            backend,
            clock_map: ClockMap {
                labels: self.labels,
                useful_length: useful,
                success_stations: self.stations[useful + 1..].to_vec(),
            },
            hamiltonian: self.terms,
        }
    }

    /// `amp * V (x) |to><from| + h.c.` between two single-site stops.
    fn hop(
        &mut self,
        work: Option<&WorkOp>,
        amp: C64,
        from: (usize, u8),
        to: (usize, u8),
        tag: String,
    ) -> Result<()> {
        let reg = &self.terms.register;
        let (clock_sites, from_digits, to_digits) = if from.0 == to.0 {
            (vec![from.0], vec![from.1], vec![to.1])
        } else {
            (vec![from.0, to.0], vec![from.1, 0], vec![0, to.1])
        };
        let dims: Vec<usize> = clock_sites.iter().map(|&s| reg.site(s).dim).collect();
        let dc: usize = dims.iter().product();
        let index = |digits: &[u8]| {
            digits
                .iter()
                .zip(&dims)
                .fold(0usize, |acc, (&d, &n)| acc * n + d as usize)
        };
        let mut clock = vec![ZERO; dc * dc];
        clock[index(&to_digits) * dc + index(&from_digits)] = amp;

        let (sites, forward) = match work {
            Some(w) => {
                let dw = 1usize << w.qubits.len();
                let mut sites = w.qubits.clone();
                sites.extend(&clock_sites);
                (sites, kron(&w.matrix, dw, &clock, dc))
            }
            None => (clock_sites, clock),
        };
        let d = (forward.len() as f64).sqrt().round() as usize;
        let back = dagger(&forward, d);
        let matrix = forward.iter().zip(&back).map(|(a, b)| a + b).collect();
        self.terms.push(Term { sites, matrix, tag })
    }

    fn emit(&mut self, sites: Vec<usize>, matrix: Vec<C64>, tag: String) -> Result<()> {
        self.terms.push(Term { sites, matrix, tag })
    }

    /// `U_t (x) |t><t-1| + h.c.` on the pulse clock; identities carry no work factor.
    fn feynman_hop(&mut self, t: usize, gate: &Gate) -> Result<()> {
        let work = match gate {
            Gate::Identity { .. } => None,
            g => Some(WorkOp {
                qubits: g.qubits(),
                matrix: g.local_matrix(),
            }),
        };
        let from = (self.stations[t - 1], 1);
        let to = (self.stations[t], 1);
        self.hop(
            work.as_ref(),
            ONE,
            from,
            to,
            format!("hop:t={t}:{}", gate.name()),
        )?;
        self.station(t);
        Ok(())
    }

    fn switch3(&mut self, t: usize, control: usize, target: usize) -> Result<()> {
        let stop = |b: &mut Self, name: &str| {
            b.add_site(2, SiteRole::GadgetQubit, format!("{name}@g{t}"))
        };
        let u1 = stop(self, "u1");
        let u2 = stop(self, "u2");
        let l1 = stop(self, "l1");
        let l2 = stop(self, "l2");
        let prev = (self.stations[t - 1], 1);
        let next = (self.stations[t], 1);
        let p1 = WorkOp::single(control, &PROJ1);
        let p0 = WorkOp::single(control, &PROJ0);
        let x = WorkOp::single(target, &PAULI_X);

        self.hop(Some(&p1), ONE, prev, (u1, 1), format!("sw:upper:in:t={t}"))?;
        self.hop(Some(&x), ONE, (u1, 1), (u2, 1), format!("sw:upper:X:t={t}"))?;
        self.hop(Some(&p1), ONE, (u2, 1), next, format!("sw:upper:out:t={t}"))?;
        self.hop(Some(&p0), ONE, prev, (l1, 1), format!("sw:lower:in:t={t}"))?;
        self.hop(None, ONE, (l1, 1), (l2, 1), format!("sw:lower:hop:t={t}"))?;
        self.hop(Some(&p0), ONE, (l2, 1), next, format!("sw:lower:out:t={t}"))?;

        for (name, site) in [("u1", u1), ("u2", u2), ("l1", l1), ("l2", l2)] {
            let cfg = Stop::Level { site, digit: 1 }.configs();
            self.labels.push(ClockLabel {
                label: gadget_label(t, name),
                configs: cfg,
            });
        }
        self.station(t);
        Ok(())
    }

    /// Allocates the sites of one track and emits its nine hops.
    fn comb_track(&mut self, t: usize, track: &Track, backend: Backend) -> Result<()> {
        let p = track.prefix();
        let pulse_middle = backend == Backend::Q22 && matches!(track.middle, Middle::Phase(_))
            || backend == Backend::Q22 && !track.upper && self.is_phase_gate(t);

        // Physical stops 1A,1B,2,3A,3B,4,5A,5B.
        let mut stops: Vec<(String, Stop)> = Vec::with_capacity(8);
        for slot in 1..=5 {
            let name = format!("{p}{slot}");
            if slot % 2 == 0 {
                let site = self.add_site(2, SiteRole::GadgetQubit, format!("{name}@g{t}"));
                stops.push((name, Stop::Level { site, digit: 1 }));
            } else if backend == Backend::Q23 {
                let site = self.add_site(3, SiteRole::GadgetQutrit, format!("{name}@g{t}"));
                stops.push((format!("{name}A"), Stop::Level { site, digit: 1 }));
                stops.push((format!("{name}B"), Stop::Level { site, digit: 2 }));
            } else if slot == 3 && pulse_middle {
                let a = self.add_site(2, SiteRole::GadgetQubit, format!("{name}A@g{t}"));
                let b = self.add_site(2, SiteRole::GadgetQubit, format!("{name}B@g{t}"));
                stops.push((format!("{name}A"), Stop::Level { site: a, digit: 1 }));
                stops.push((format!("{name}B"), Stop::Level { site: b, digit: 1 }));
            } else {
                let first = self.add_site(2, SiteRole::GadgetQubit, format!("{name}@g{t}"));
                let second = self.add_site(2, SiteRole::GadgetQubit, format!("{name}'@g{t}"));
                for b in [false, true] {
                    let suffix = if b { 'B' } else { 'A' };
                    stops.push((format!("{name}{suffix}"), Stop::Entangled { first, second, b }));
                }
            }
        }

        let master = WorkOp::single(track.master, &track.projector);
        let (middle_work, middle_amp) = match track.middle {
            Middle::Flip(q) => (Some(WorkOp::single(q, &PAULI_X)), ONE),
            Middle::Plain => (None, ONE),
            Middle::Phase(theta) => (None, C64::from_polar(1.0, theta)),
        };
        let prev = (format!("c_{}", t - 1), self.station_stop(t - 1));
        let next = (format!("c_{t}"), self.station_stop(t));

        let mut path = Vec::with_capacity(10);
        path.push(prev);
        path.extend(stops.iter().cloned());
        path.push(next);

        let track_tag = match backend {
            Backend::Q23 => format!("H23{p}"),
            _ => format!("H22{p}"),
        };
        for k in 0..9 {
            let (ref from_name, from) = path[k];
            let (ref to_name, to) = path[k + 1];
            let (work, amp) = match k {
                1 | 7 => (Some(&master), ONE),
                4 => (middle_work.as_ref(), middle_amp),
                _ => (None, ONE),
            };
            let tag = format!("{track_tag}:t={t}:hop({from_name}\u{2192}{to_name})");
            self.lower_hop(work, amp, from, to, tag)?;
        }

        for (name, stop) in &stops {
            self.labels.push(ClockLabel {
                label: gadget_label(t, name),
                configs: stop.configs(),
            });
        }
        Ok(())
    }

    fn is_phase_gate(&self, t: usize) -> bool {
        matches!(self.circuit.gates()[t - 1], Gate::BasisPhase { .. })
    }

    /// Lowers one logical hop to terms on the physical encoding.
    fn lower_hop(
        &mut self,
        work: Option<&WorkOp>,
        amp: C64,
        from: Stop,
        to: Stop,
        tag: String,
    ) -> Result<()> {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let reg_label = |b: &Self, s: usize| b.terms.register.site(s).label.clone();
        match (from, to) {
            (Stop::Level { site: a, digit: da }, Stop::Level { site: b, digit: db }) => {
                self.hop(work, amp, (a, da), (b, db), tag)
            }
            // |1>|00> <-> |0>|+>
            (Stop::Level { site: s, digit: 1 }, Stop::Entangled { first, second, b: false })
                if work.is_none() && amp == ONE =>
            {
                for e in [first, second] {
                    let t = format!("{tag}[0+:{}]", reg_label(self, e));
                    self.hop(None, h, (s, 1), (e, 1), t)?;
                }
                Ok(())
            }
            // |->|0> <-> |00>|1>
            (Stop::Entangled { first, second, b: true }, Stop::Level { site: s, digit: 1 })
                if work.is_none() && amp == ONE =>
            {
                for (e, sign) in [(first, -1.0), (second, 1.0)] {
                    let t = format!("{tag}[-0:{}]", reg_label(self, e));
                    self.hop(None, h * sign, (e, 1), (s, 1), t)?;
                }
                Ok(())
            }
            // |+> <-> |-> via (Z1 - Z2)/2 (x) V
            (
                Stop::Entangled { first, second, b: false },
                Stop::Entangled { first: f2, second: s2, b: true },
            ) if first == f2 && second == s2 && amp == ONE => {
                let z = mat2_flat(&PAULI_Z);
                match work {
                    Some(w) => {
                        let dw = 1usize << w.qubits.len();
                        for (e, sign) in [(first, 0.5), (second, -0.5)] {
                            let m: Vec<C64> = kron(&w.matrix, dw, &z, 2)
                                .into_iter()
                                .map(|x| x * sign)
                                .collect();
                            let mut sites = w.qubits.clone();
                            sites.push(e);
                            let t = format!("{tag}[Z:{}]", reg_label(self, e));
                            self.emit(sites, m, t)?;
                        }
                        Ok(())
                    }
                    None => {
                        let i = mat2_flat(&crate::linalg::IDENTITY2);
                        let zi = kron(&z, 2, &i, 2);
                        let iz = kron(&i, 2, &z, 2);
                        let m = zi.iter().zip(&iz).map(|(a, b)| (a - b) * 0.5).collect();
                        self.emit(vec![first, second], m, format!("{tag}[Z-Z]"))
                    }
                }
            }
            _ => Err(Error::InvalidTerm(format!(
                "{tag}: no 2-local qubit pattern for this hop"
            ))),
        }
    }
}
