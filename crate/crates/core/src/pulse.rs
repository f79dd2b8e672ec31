//! Gap tables, multi-tone flux/drive compilation and protocol schedules.
//!
//! Flux tones carry phase π: the SQUID cross term enters the chain
//! Hamiltonian as −2√(Q_ℓQ_ℓ+1)Φ̄(t)(a+a†)(a+a†), so a cosine with phase π and
//! amplitude f/(χχ) leaves +f√(Q_ℓQ_ℓ+1) on each resonant operator pair.

use crate::circuit::{ChainConfig, FluxSignal, SquidCoupling, Tone};
use crate::error::{invalid, Error, Result};
use crate::spectrum::DressedSite;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;

/// Transitions of the spin-1 ladder, (upper, lower).
pub const LADDER: [(usize, usize); 2] = [(1, 0), (2, 1)];

const ELEMENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    /// Compilation fails unless strength / margin is below this.
    pub rwa_ratio_limit: f64,
    /// Needed tone frequencies must be separated by this many multiples of
    /// the gate strength.
    pub separation_factor: f64,
    /// Rotation rate must be below this fraction of every drive frequency.
    pub drive_ratio_limit: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { rwa_ratio_limit: 0.1, separation_factor: 100.0, drive_ratio_limit: 0.01 }
    }
}

impl CompileOptions {
    /// Skip every guard; margins are still computed and reported.
    pub fn unchecked() -> Self {
        Self { rwa_ratio_limit: f64::INFINITY, separation_factor: 0.0, drive_ratio_limit: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    /// Transition (k, j), k > j, on the left site.
    pub left: (usize, usize),
    /// Transition (m, l), m > l, on the right site.
    pub right: (usize, usize),
    /// δ = (ε_m − ε_l) + (ε_k − ε_j).
    pub sum: f64,
    /// Δ = |(ε_m − ε_l) − (ε_k − ε_j)|.
    pub diff: f64,
}

/// Sum and difference gaps between every pair of upward transitions of two
/// neighbouring sites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapTable {
    pub levels: usize,
    pub entries: Vec<GapEntry>,
}

impl GapTable {
    pub fn new(left: &DressedSite, right: &DressedSite) -> Result<Self> {
        let levels = left.n_kept();
        if levels != right.n_kept() {
            return Err(Error::DimensionMismatch { expected: levels, got: right.n_kept() });
        }
        if levels < 3 {
            return Err(invalid("n_kept", format!("need at least 3 levels, got {levels}")));
        }
        let mut entries = Vec::new();
        for k in 0..levels {
            for j in 0..k {
                for m in 0..levels {
                    for l in 0..m {
                        let (wl, wr) = (left.gap(k, j), right.gap(m, l));
                        entries.push(GapEntry { left: (k, j), right: (m, l), sum: wr + wl, diff: (wr - wl).abs() });
                    }
                }
            }
        }
        Ok(Self { levels, entries })
    }

    fn entry(&self, left: (usize, usize), right: (usize, usize)) -> &GapEntry {
        self.entries
            .iter()
            .find(|e| e.left == left && e.right == right)
            .unwrap_or_else(|| panic!("no gap entry for {left:?} × {right:?}"))
    }

    /// δ_kj^ml
    pub fn sum(&self, k: usize, j: usize, m: usize, l: usize) -> f64 {
        self.entry((k, j), (m, l)).sum
    }

    /// Δ_kj^ml
    pub fn diff(&self, k: usize, j: usize, m: usize, l: usize) -> f64 {
        self.entry((k, j), (m, l)).diff
    }

    /// The eight ladder frequencies the XY and XX gates may activate.
    pub fn ladder_frequencies(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for &(k, j) in &LADDER {
            for &(m, l) in &LADDER {
                out.push((format!("Δ{k}{j}^{m}{l}"), self.diff(k, j, m, l)));
            }
        }
        for &(k, j) in &LADDER {
            for &(m, l) in &LADDER {
                out.push((format!("δ{k}{j}^{m}{l}"), self.sum(k, j, m, l)));
            }
        }
        out
    }

    /// Minimum spacing between two distinct ladder frequencies.
    pub fn min_spacing(&self) -> f64 {
        min_pairwise(&self.ladder_frequencies().iter().map(|(_, f)| *f).collect::<Vec<_>>())
    }

    /// Fail when two of the `needed` frequencies sit closer than `guard`.
    pub fn check_separation(needed: &[(String, f64)], guard: f64) -> Result<()> {
        for (i, (a, fa)) in needed.iter().enumerate() {
            for (b, fb) in &needed[i + 1..] {
                let spacing = (fa - fb).abs();
                if spacing < guard {
                    return Err(Error::FrequencyCollision { first: a.clone(), second: b.clone(), spacing, guard });
                }
            }
        }
        Ok(())
    }
}

fn min_pairwise(values: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            best = best.min((a - b).abs());
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resonance {
    /// One site goes up while the other goes down (tone at Δ).
    Difference,
    /// Both sites go up together (tone at δ).
    Sum,
}

/// The operator pair a flux tone is meant to make resonant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneTarget {
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub resonance: Resonance,
}

impl fmt::Display for ToneTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = match self.resonance {
            Resonance::Difference => "Δ",
            Resonance::Sum => "δ",
        };
        write!(f, "{sym}{}{}^{}{}", self.left.0, self.left.1, self.right.0, self.right.1)
    }
}

fn same_transition(a: (usize, usize), b: (usize, usize)) -> bool {
    a == b || (a.1, a.0) == b
}

/// Closest approach of an unwanted term to resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaMargin {
    /// Smallest residual frequency of any non-targeted modulated term (rad/s).
    pub delta_min: f64,
    pub worst_term: String,
    /// Smallest frequency among the static (unmodulated) coupling terms.
    pub static_min: f64,
}

/// Residual-frequency margin of every term a set of flux tones generates on
/// one SQUID.
pub fn flux_margin(
    left: &DressedSite,
    right: &DressedSite,
    coupling: &SquidCoupling,
    tones: &[Tone],
    targets: &[ToneTarget],
) -> Result<RwaMargin> {
    let n = left.n_kept();
    let scale = left.epsilon.iter().chain(&right.epsilon).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = 1e-9 * scale;
    let mut margin = RwaMargin { delta_min: f64::INFINITY, worst_term: String::new(), static_min: f64::INFINITY };
    let mut consider = |residual: f64, label: &dyn Fn() -> String, intended: bool| -> Result<()> {
        if residual.abs() < tol {
            if intended {
                return Ok(());
            }
            return Err(Error::FrequencyCollision { first: label(), second: "tone".into(), spacing: residual.abs(), guard: tol });
        }
        if residual.abs() < margin.delta_min {
            margin.delta_min = residual.abs();
            margin.worst_term = label();
        }
        Ok(())
    };
    let (chi_l, chi_r) = (left.chi(), right.chi());
    let cross = coupling.modulated_cross() > 0.0;
    for k in 0..n {
        for j in 0..n {
            if k == j || chi_l[(k, j)].abs() < ELEMENT_FLOOR {
                continue;
            }
            for m in 0..n {
                for l in 0..n {
                    if m == l || chi_r[(m, l)].abs() < ELEMENT_FLOOR {
                        continue;
                    }
                    let (wl, wr) = (left.gap(k, j), right.gap(m, l));
                    let omega = wl + wr;
                    if coupling.static_cross() > 0.0 {
                        margin.static_min = margin.static_min.min(omega.abs());
                    }
                    if !cross {
                        continue;
                    }
                    for (tone, target) in tones.iter().zip(targets) {
                        let kind = if (wl > 0.0) == (wr > 0.0) { Resonance::Sum } else { Resonance::Difference };
                        let intended = same_transition((k, j), target.left)
                            && same_transition((m, l), target.right)
                            && kind == target.resonance;
                        for sign in [-1.0, 1.0] {
                            let residual = omega + sign * tone.frequency;
                            consider(residual, &|| format!("χχ({k}{j},{m}{l}) vs {target}"), intended)?;
                        }
                    }
                }
            }
        }
    }
    for (site, q, p) in [(left, coupling.q_left, coupling.p_left), (right, coupling.q_right, coupling.p_right)] {
        let z = site.z();
        for k in 0..n {
            for j in 0..n {
                if z[(k, j)].abs() < ELEMENT_FLOOR {
                    continue;
                }
                let omega = site.gap(k, j);
                if p > 0.0 && k != j {
                    margin.static_min = margin.static_min.min(omega.abs());
                }
                if q == 0.0 {
                    continue;
                }
                for tone in tones {
                    for sign in [-1.0, 1.0] {
                        consider(omega + sign * tone.frequency, &|| format!("z({k}{j}) at {:.4e}", tone.frequency), false)?;
                    }
                }
            }
        }
    }
    Ok(margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Xy,
    Xx,
}

/// Flux waveform for one SQUID plus what it is expected to realize.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledFlux {
    pub kind: GateKind,
    pub signal: FluxSignal,
    pub targets: Vec<ToneTarget>,
    pub f: f64,
    /// Effective strength C = f√(Q_ℓ Q_ℓ+1) (rad/s).
    pub strength: f64,
    pub margin: RwaMargin,
    /// Separation between the needed tone frequencies.
    pub tone_spacing: f64,
    pub notes: Vec<String>,
}

impl CompiledFlux {
    /// strength / Δ_min.
    pub fn rwa_ratio(&self) -> f64 {
        self.strength.abs() / self.margin.delta_min
    }
}

fn ladder_element(site: &DressedSite, index: usize, (k, j): (usize, usize)) -> Result<f64> {
    let v = site.chi()[(k, j)];
    if v.abs() < ELEMENT_FLOOR {
        return Err(Error::VanishingMatrixElement { site: index, k, j });
    }
    Ok(v)
}

fn compile_flux(
    kind: GateKind,
    left: &DressedSite,
    right: &DressedSite,
    coupling: &SquidCoupling,
    f: f64,
    opts: &CompileOptions,
) -> Result<CompiledFlux> {
    let table = GapTable::new(left, right)?;
    let scale = left.epsilon.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if table.diff(1, 0, 1, 0) < 1e-9 * scale {
        return Err(Error::IdenticalSpecies);
    }
    let mut targets = Vec::new();
    for &a in &LADDER {
        for &b in &LADDER {
            targets.push(ToneTarget { left: a, right: b, resonance: Resonance::Difference });
        }
    }
    if kind == GateKind::Xx {
        for &a in &LADDER {
            for &b in &LADDER {
                targets.push(ToneTarget { left: a, right: b, resonance: Resonance::Sum });
            }
        }
    }
    let share = match kind {
        GateKind::Xy => 1.0,
        GateKind::Xx => 0.5,
    };
    let mut tones = Vec::with_capacity(targets.len());
    let mut needed = Vec::with_capacity(targets.len());
    for t in &targets {
        let gamma = f / (ladder_element(left, 0, t.left)? * ladder_element(right, 1, t.right)?);
        let frequency = match t.resonance {
            Resonance::Difference => table.diff(t.left.0, t.left.1, t.right.0, t.right.1),
            Resonance::Sum => table.sum(t.left.0, t.left.1, t.right.0, t.right.1),
        };
        tones.push(Tone { amplitude: share * gamma, frequency, phase: PI });
        needed.push((t.to_string(), frequency));
    }
    let strength = f * (coupling.q_left * coupling.q_right).sqrt();
    let margin = flux_margin(left, right, coupling, &tones, &targets)?;
    let tone_spacing = min_pairwise(&needed.iter().map(|(_, f)| *f).collect::<Vec<_>>());
    if strength != 0.0 {
        GapTable::check_separation(&needed, opts.separation_factor * strength.abs())?;
        if strength.abs() >= opts.rwa_ratio_limit * margin.delta_min {
            return Err(Error::RwaViolation { strength: strength.abs(), margin: margin.delta_min, limit: opts.rwa_ratio_limit });
        }
    }
    let signal = FluxSignal::new(tones);
    let mut notes = Vec::new();
    if kind == GateKind::Xx {
        notes.push("sum-frequency tones use the four distinct δ_kj^ml of the ladder, δ10^21 and δ21^10 both present".into());
    }
    if !signal.within_linear_regime() {
        notes.push(format!("flux excursion {:.3e} exceeds the linear-response limit", signal.max_excursion()));
    }
    Ok(CompiledFlux { kind, signal, targets, f, strength, margin, tone_spacing, notes })
}

/// Four-tone flux realizing C(S_X S_X + S_Y S_Y) on one SQUID.
pub fn compile_xy(left: &DressedSite, right: &DressedSite, coupling: &SquidCoupling, f: f64, opts: &CompileOptions) -> Result<CompiledFlux> {
    compile_flux(GateKind::Xy, left, right, coupling, f, opts)
}

/// Eight-tone flux realizing C·S_X S_X on one SQUID.
pub fn compile_xx(left: &DressedSite, right: &DressedSite, coupling: &SquidCoupling, f: f64, opts: &CompileOptions) -> Result<CompiledFlux> {
    compile_flux(GateKind::Xx, left, right, coupling, f, opts)
}

/// Two-tone drive on (a+a†) of one site; tone `l` addresses |l⟩ ↔ |l−1⟩.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledDrive {
    pub tones: Vec<Tone>,
    /// Rotation rate r (rad/s).
    pub rate: f64,
    pub phase: f64,
    /// π/(2r).
    pub duration: f64,
    /// Smallest residual frequency of a non-targeted drive term.
    pub margin: f64,
}

/// Drive realizing r(S_X cos φ + S_Y sin φ) on one site.
pub fn compile_rotation(site: &DressedSite, r: f64, phase: f64, opts: &CompileOptions) -> Result<CompiledDrive> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("rotation rate must be positive, got {r}")));
    }
    if site.n_kept() < 3 {
        return Err(invalid("n_kept", "need at least 3 levels"));
    }
    let mut tones = Vec::with_capacity(2);
    for &(hi, lo) in LADDER.iter() {
        let chi = ladder_element(site, 0, (hi, lo))?;
        let mu = site.gap(hi, lo);
        if r >= opts.drive_ratio_limit * mu {
            return Err(Error::RwaViolation { strength: r, margin: mu, limit: opts.drive_ratio_limit });
        }
        let phi = if chi < 0.0 { phase + PI } else { phase };
        tones.push(Tone { amplitude: SQRT_2 * r / chi.abs(), frequency: mu, phase: phi });
    }
    let margin = drive_margin(site, &tones)?;
    Ok(CompiledDrive { tones, rate: r, phase, duration: FRAC_PI_2 / r, margin })
}

fn drive_margin(site: &DressedSite, tones: &[Tone]) -> Result<f64> {
    let n = site.n_kept();
    let scale = site.epsilon.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = 1e-9 * scale;
    let mut best = f64::INFINITY;
    for k in 0..n {
        for j in 0..n {
            if k == j || site.chi()[(k, j)].abs() < ELEMENT_FLOOR {
                continue;
            }
            let omega = site.gap(k, j);
            for (tone, &target) in tones.iter().zip(LADDER.iter()) {
                for sign in [-1.0, 1.0] {
                    let residual = omega + sign * tone.frequency;
                    if residual.abs() < tol {
                        if same_transition((k, j), target) {
                            continue;
                        }
                        return Err(Error::FrequencyCollision {
                            first: format!("χ({k}{j})"),
                            second: format!("drive tone {target:?}"),
                            spacing: residual.abs(),
                            guard: tol,
                        });
                    }
                    best = best.min(residual.abs());
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SegmentKind {
    Xy,
    Xx,
    RotX,
    RotXDag,
    RotY,
    RotYDag,
    Idle,
    Ising,
}

impl SegmentKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, SegmentKind::RotX | SegmentKind::RotXDag | SegmentKind::RotY | SegmentKind::RotYDag)
    }

    /// Drive phase φ giving generator ±r S_X or ±r S_Y.
    pub fn drive_phase(self) -> Option<f64> {
        match self {
            SegmentKind::RotX => Some(0.0),
            SegmentKind::RotXDag => Some(PI),
            SegmentKind::RotY => Some(FRAC_PI_2),
            SegmentKind::RotYDag => Some(-FRAC_PI_2),
            _ => None,
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneRecord {
    /// `squid:<ℓ>` for flux tones, `site:<ℓ>` for drive tones.
    pub target: String,
    pub amplitude: f64,
    pub frequency_rad_s: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Gate strength C, rotation rate r, or Ising J (rad/s).
    pub strength_rad_s: f64,
    /// Transverse field B of an ISING segment (rad/s).
    #[serde(default)]
    pub field_rad_s: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub tones: Vec<ToneRecord>,
}

impl Segment {
    fn new(kind: SegmentKind, strength: f64, duration: f64) -> Self {
        Self { kind, strength_rad_s: strength, field_rad_s: 0.0, duration_s: duration, tones: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub protocol: String,
    /// Segments in time order; the first entry acts first on the state.
    pub segments: Vec<Segment>,
    pub total_duration_s: f64,
    /// Simulated model time t.
    pub model_time_s: f64,
    pub n_trotter: usize,
    /// (λ_x, λ_y, λ_z) realized by a Heisenberg-type schedule.
    #[serde(default)]
    pub lambda_rad_s: Option<[f64; 3]>,
    /// Segments per Trotter step.
    pub step_len: usize,
}

impl GateSchedule {
    fn from_segments(protocol: &str, segments: Vec<Segment>, model_time: f64, n_trotter: usize, step_len: usize, lambda: Option<[f64; 3]>) -> Self {
        let total = segments.iter().map(|s| s.duration_s).sum();
        Self {
            protocol: protocol.into(),
            segments,
            total_duration_s: total,
            model_time_s: model_time,
            n_trotter,
            lambda_rad_s: lambda,
            step_len,
        }
    }

    /// Wall-clock times at the end of every Trotter step, starting with 0.
    pub fn step_boundaries(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut t = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            t += seg.duration_s;
            if (i + 1) % self.step_len == 0 {
                out.push(t);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (index, s) in self.segments.iter().enumerate() {
            if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
                return Err(Error::Segment {
                    index,
                    kind: s.kind.to_string(),
                    source: Box::new(invalid("duration", format!("must be positive, got {}", s.duration_s))),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// λ_x = C_xy + C_zx, λ_y = C_xy + C_yz, λ_z = C_yz + C_zx.
pub fn lambdas_from_couplings(c_xy: f64, c_yz: f64, c_zx: f64) -> [f64; 3] {
    [c_xy + c_zx, c_xy + c_yz, c_yz + c_zx]
}

/// Inverse of [`lambdas_from_couplings`]; every coupling must come out ≥ 0.
pub fn couplings_from_lambdas([lx, ly, lz]: [f64; 3]) -> Result<(f64, f64, f64)> {
    let c_xy = 0.5 * (lx + ly - lz);
    let c_yz = 0.5 * (ly + lz - lx);
    let c_zx = 0.5 * (lx + lz - ly);
    for (name, c) in [("C_xy", c_xy), ("C_yz", c_yz), ("C_zx", c_zx)] {
        if c < -1e-12 * (lx.abs() + ly.abs() + lz.abs()) {
            return Err(invalid("lambda", format!("{name} = {c:.3e} would be negative")));
        }
    }
    Ok((c_xy.max(0.0), c_yz.max(0.0), c_zx.max(0.0)))
}

fn check_protocol(t: f64, n_trotter: usize, r: f64, strengths: &[f64]) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    if n_trotter < 1 {
        return Err(invalid("n_trotter", "need at least one Trotter step"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("rotation rate must be positive, got {r}")));
    }
    if strengths.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(invalid("strength", "gate strengths must be non-negative"));
    }
    Ok(())
}

/// Seven-segment Trotter step, repeated `n_trotter` times:
/// R_X†, XY(C_zx), R_X, R_Y, XY(C_yz), R_Y†, XY(C_xy).
pub fn schedule_heisenberg(t: f64, n_trotter: usize, c_xy: f64, c_yz: f64, c_zx: f64, r: f64) -> Result<GateSchedule> {
    check_protocol(t, n_trotter, r, &[c_xy, c_yz, c_zx])?;
    let tau = t / n_trotter as f64;
    let rot = FRAC_PI_2 / r;
    let step = [
        Segment::new(SegmentKind::RotXDag, r, rot),
        Segment::new(SegmentKind::Xy, c_zx, tau),
        Segment::new(SegmentKind::RotX, r, rot),
        Segment::new(SegmentKind::RotY, r, rot),
        Segment::new(SegmentKind::Xy, c_yz, tau),
        Segment::new(SegmentKind::RotYDag, r, rot),
        Segment::new(SegmentKind::Xy, c_xy, tau),
    ];
    let segments = (0..n_trotter).flat_map(|_| step.iter().cloned()).collect();
    Ok(GateSchedule::from_segments("heisenberg", segments, t, n_trotter, step.len(), Some(lambdas_from_couplings(c_xy, c_yz, c_zx))))
}

/// Four-segment Trotter step: R_Y, XX(C_z), R_Y†, XY(C_xy).
pub fn schedule_xxz(t: f64, n_trotter: usize, c_xy: f64, c_z: f64, r: f64) -> Result<GateSchedule> {
    check_protocol(t, n_trotter, r, &[c_xy, c_z])?;
    let tau = t / n_trotter as f64;
    let rot = FRAC_PI_2 / r;
    let step = [
        Segment::new(SegmentKind::RotY, r, rot),
        Segment::new(SegmentKind::Xx, c_z, tau),
        Segment::new(SegmentKind::RotYDag, r, rot),
        Segment::new(SegmentKind::Xy, c_xy, tau),
    ];
    let segments = (0..n_trotter).flat_map(|_| step.iter().cloned()).collect();
    Ok(GateSchedule::from_segments("xxz", segments, t, n_trotter, step.len(), Some([c_xy, c_xy, c_z])))
}

/// One analog segment: XX flux (J) on every SQUID plus a resonant drive
/// giving B·S_X on every site.
pub fn schedule_ising(t: f64, j: f64, b: f64) -> Result<GateSchedule> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    let mut seg = Segment::new(SegmentKind::Ising, j, t);
    seg.field_rad_s = b;
    Ok(GateSchedule::from_segments("ising", vec![seg], t, 1, 1, None))
}

/// Fill in the flux and drive tones of every segment for a concrete chain.
pub fn attach_tones(schedule: &mut GateSchedule, chain: &ChainConfig, opts: &CompileOptions) -> Result<()> {
    for (index, seg) in schedule.segments.iter_mut().enumerate() {
        let wrap = |e: Error| Error::Segment { index, kind: seg.kind.to_string(), source: Box::new(e) };
        let mut tones = Vec::new();
        let flux = |kind: GateKind, strength: f64, tones: &mut Vec<ToneRecord>| -> Result<()> {
            for (s, c) in chain.couplings.iter().enumerate() {
                let q = (c.q_left * c.q_right).sqrt();
                if q == 0.0 {
                    return Err(invalid("Q", format!("SQUID {s} has no modulated coupling")));
                }
                let (left, right) = (&chain.sites[s], &chain.sites[s + 1]);
                let compiled = match kind {
                    GateKind::Xy => compile_xy(left, right, c, strength / q, opts)?,
                    GateKind::Xx => compile_xx(left, right, c, strength / q, opts)?,
                };
                tones.extend(compiled.signal.tones.iter().map(|t| record(format!("squid:{s}"), t)));
            }
            Ok(())
        };
        let drive = |rate: f64, phase: f64, tones: &mut Vec<ToneRecord>| -> Result<()> {
            for (l, site) in chain.sites.iter().enumerate() {
                let d = compile_rotation(site, rate, phase, opts)?;
                tones.extend(d.tones.iter().map(|t| record(format!("site:{l}"), t)));
            }
            Ok(())
        };
        match seg.kind {
            SegmentKind::Xy => flux(GateKind::Xy, seg.strength_rad_s, &mut tones).map_err(wrap)?,
            SegmentKind::Xx => flux(GateKind::Xx, seg.strength_rad_s, &mut tones).map_err(wrap)?,
            SegmentKind::Ising => {
                flux(GateKind::Xx, seg.strength_rad_s, &mut tones).map_err(wrap)?;
                if seg.field_rad_s > 0.0 {
                    drive(seg.field_rad_s, 0.0, &mut tones).map_err(wrap)?;
                }
            }
            SegmentKind::Idle => {}
            kind => drive(seg.strength_rad_s, kind.drive_phase().expect("rotation"), &mut tones).map_err(wrap)?,
        }
        seg.tones = tones;
    }
    Ok(())
}

fn record(target: String, t: &Tone) -> ToneRecord {
    ToneRecord { target, amplitude: t.amplitude, frequency_rad_s: t.frequency, phase_rad: t.phase }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{DressedSpecies, QrsParams, Species};
    use std::sync::Arc;

    fn sites(p: f64) -> (DressedSite, DressedSite) {
        let a = Arc::new(DressedSpecies::new(QrsParams::new(0.9, 1.0, 0.6, 30, Species::A), 4).unwrap());
        let b = Arc::new(DressedSpecies::new(QrsParams::new(0.9, 1.0, 0.9, 30, Species::B), 4).unwrap());
        (DressedSite::new(a, 0.0, p).unwrap(), DressedSite::new(b, p, 0.0).unwrap())
    }

    #[test]
    fn identical_sites_are_refused() {
        let (a, _) = sites(0.0);
        let table = GapTable::new(&a, &a).unwrap();
        assert_eq!(table.diff(1, 0, 1, 0), 0.0);
        let c = SquidCoupling::uniform(0.0, 1e-3);
        assert!(matches!(compile_xy(&a, &a, &c, 1e-3, &CompileOptions::default()), Err(Error::IdenticalSpecies)));
    }

    #[test]
    fn sum_gap_definition() {
        let (a, b) = sites(1e-3);
        let table = GapTable::new(&a, &b).unwrap();
        let want = (b.epsilon[1] - b.epsilon[0]) + (a.epsilon[1] - a.epsilon[0]);
        assert_eq!(table.sum(1, 0, 1, 0), want);
        for e in &table.entries {
            assert!(e.sum > 0.0 && e.diff >= 0.0);
        }
    }

    #[test]
    fn xy_tones_and_amplitudes() {
        let (a, b) = sites(0.0);
        let c = SquidCoupling::uniform(0.0, 1e-3);
        let flux = compile_xy(&a, &b, &c, 0.1, &CompileOptions::unchecked()).unwrap();
        assert_eq!(flux.signal.tones.len(), 4);
        let g = &flux.signal.tones;
        let want = (a.chi()[(2, 1)] * b.chi()[(2, 1)]) / (a.chi()[(1, 0)] * b.chi()[(1, 0)]);
        assert!((g[0].amplitude / g[3].amplitude - want).abs() < 1e-12);
        assert!((flux.strength - 0.1 * 1e-3).abs() < 1e-18);
        let table = GapTable::new(&a, &b).unwrap();
        assert_eq!(g[0].frequency, table.diff(1, 0, 1, 0));
        assert_eq!(g[3].frequency, table.diff(2, 1, 2, 1));
    }

    #[test]
    fn zero_f_gives_silent_flux() {
        let (a, b) = sites(0.0);
        let flux = compile_xy(&a, &b, &SquidCoupling::uniform(0.0, 1e-3), 0.0, &CompileOptions::default()).unwrap();
        assert!(flux.signal.tones.iter().all(|t| t.amplitude == 0.0));
    }

    #[test]
    fn xx_halves_xy_amplitudes() {
        let (a, b) = sites(0.0);
        let c = SquidCoupling::uniform(0.0, 1e-3);
        let xy = compile_xy(&a, &b, &c, 0.1, &CompileOptions::unchecked()).unwrap();
        let xx = compile_xx(&a, &b, &c, 0.1, &CompileOptions::unchecked()).unwrap();
        assert_eq!(xx.signal.tones.len(), 8);
        for n in 0..4 {
            assert_eq!(xx.signal.tones[n].amplitude, xy.signal.tones[n].amplitude / 2.0);
            assert_eq!(xx.signal.tones[n + 4].amplitude, xy.signal.tones[n].amplitude / 2.0);
            assert!(xx.signal.tones[n + 4].frequency > xx.signal.tones[n].frequency);
        }
    }

    #[test]
    fn strong_gate_violates_rwa() {
        let (a, b) = sites(0.0);
        let c = SquidCoupling::uniform(0.0, 1.0);
        let err = compile_xy(&a, &b, &c, 0.5, &CompileOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RwaViolation { .. } | Error::FrequencyCollision { .. }));
    }

    #[test]
    fn rotation_tones_match_gaps() {
        let (a, _) = sites(0.0);
        let d = compile_rotation(&a, 1e-4, 0.0, &CompileOptions::default()).unwrap();
        assert_eq!(d.tones[0].frequency, a.gap(1, 0));
        assert_eq!(d.tones[1].frequency, a.gap(2, 1));
        assert!(d.tones.iter().all(|t| t.amplitude > 0.0));
        assert!((d.duration - FRAC_PI_2 / 1e-4).abs() < 1e-6);
        assert!(compile_rotation(&a, 0.0, 0.0, &CompileOptions::default()).is_err());
        assert!(compile_rotation(&a, 0.1, 0.0, &CompileOptions::default()).is_err());
    }

    #[test]
    fn heisenberg_schedule_shape() {
        let s = schedule_heisenberg(1.0, 3, 0.5, 0.2, 0.1, 2.0).unwrap();
        assert_eq!(s.segments.len(), 21);
        assert_eq!(s.step_len, 7);
        let want = 3.0 + 4.0 * 3.0 * FRAC_PI_2 / 2.0;
        assert!((s.total_duration_s - want).abs() < 1e-12);
        assert_eq!(s.lambda_rad_s, Some([0.6, 0.7, 0.30000000000000004]));
        assert_eq!(s.step_boundaries().len(), 4);
    }

    #[test]
    fn isotropic_point() {
        assert_eq!(lambdas_from_couplings(0.25, 0.25, 0.25), [0.5, 0.5, 0.5]);
        let (xy, yz, zx) = couplings_from_lambdas([1.0, 1.0, 0.5]).unwrap();
        assert_eq!((xy, yz, zx), (0.75, 0.25, 0.25));
        assert!(couplings_from_lambdas([1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn xxz_schedule_shape() {
        let s = schedule_xxz(1.0, 2, 0.3, 0.3, 1.0).unwrap();
        assert_eq!(s.segments.len(), 8);
        let kinds: Vec<_> = s.segments[..4].iter().map(|x| x.kind).collect();
        assert_eq!(kinds, vec![SegmentKind::RotY, SegmentKind::Xx, SegmentKind::RotYDag, SegmentKind::Xy]);
    }

    #[test]
    fn schedule_json_roundtrip() {
        let s = schedule_heisenberg(1e-8, 2, 1e8, 2e7, 3e7, 5e7).unwrap();
        let text = s.to_json().unwrap();
        assert!(text.contains("\"ROT_X_DAG\""));
        assert!(text.contains("strength_rad_s"));
        assert_eq!(GateSchedule::from_json(&text).unwrap(), s);
    }
}
