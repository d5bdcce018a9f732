use crate::assembly::FieldVector;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, LinearOperator, MassOperator};

/// Two consecutive time levels `e^{n-1}, e^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientState {
    pub e_prev: Vec<f64>,
    pub e_curr: Vec<f64>,
    /// Index of `e_curr`.
    pub n: usize,
    pub tau: f64,
    pub t_end: f64,
}

impl TransientState {
    pub fn new(e0: Vec<f64>, e1: Vec<f64>, tau: f64, t_end: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        if e0.len() != e1.len() {
            return Err(Error::InvalidArgument(format!(
                "initial vectors differ in length: {} vs {}",
                e0.len(),
                e1.len()
            )));
        }
        Ok(Self {
            e_prev: e0,
            e_curr: e1,
            n: 1,
            tau,
            t_end,
        })
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.tau
    }

    /// Number of steps `N` with `N tau >= t_end`, guarding against round-off
    /// when `t_end / tau` is an integer.
    pub fn total_steps(&self) -> usize {
        steps_for(self.t_end, self.tau)
    }
}

pub(crate) fn steps_for(t_end: f64, tau: f64) -> usize {
    let r = t_end / tau;
    let nearest = r.round();
    if (r - nearest).abs() < 1e-9 * r.max(1.0) {
        nearest as usize
    } else {
        r.ceil() as usize
    }
}

/// Discrete energies `E^{n+1/2}`, starting with `E^{1/2}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace {
    pub values: Vec<f64>,
}

impl EnergyTrace {
    /// `max_n |E^{n+1/2} - E^{1/2}| / |E^{1/2}|`.
    pub fn relative_drift(&self) -> f64 {
        let Some(&e0) = self.values.first() else {
            return 0.0;
        };
        let worst = self.values.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        if e0 == 0.0 {
            worst
        } else {
            worst / e0.abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounters {
    pub steps: usize,
    pub mass_solves: usize,
    pub stiffness_applies: usize,
}

/// Central-difference stepper
/// `e^{n+1} = 2 e^n - e^{n-1} + tau^2 M^{-1} (g^n - K e^n)`.
///
/// The energy recorded after a step is
/// `E^{n+1/2} = 1/2 |d|_M^2 + 1/2 (e^{n+1})^T K e^n` with
/// `d = (e^{n+1} - e^n) / tau`, which equals
/// `1/2 |d|_M^2 + 1/2 (|curl e_hat|^2 - tau^2/4 |curl d|^2)` for the average
/// `e_hat = (e^{n+1} + e^n) / 2` and obeys
/// `E^{n+1/2} - E^{n-1/2} = (g^n, e^{n+1} - e^{n-1}) / 2`.
pub struct Leapfrog<'a> {
    mass: &'a dyn MassOperator,
    stiffness: &'a dyn LinearOperator,
    counters: OpCounters,
    ke: Vec<f64>,
    rhs: Vec<f64>,
    acc: Vec<f64>,
    scratch: Vec<f64>,
    blowup_reference: f64,
    blowup_factor: f64,
}

impl<'a> Leapfrog<'a> {
    pub const BLOWUP_FACTOR: f64 = 1e12;

    pub fn new(mass: &'a dyn MassOperator, stiffness: &'a dyn LinearOperator) -> Self {
        let n = stiffness.dim();
        Self {
            mass,
            stiffness,
            counters: OpCounters::default(),
            ke: vec![0.0; n],
            rhs: vec![0.0; n],
            acc: vec![0.0; n],
            scratch: vec![0.0; n],
            blowup_reference: 0.0,
            blowup_factor: Self::BLOWUP_FACTOR,
        }
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    /// `E^{1/2}`-style energy of an arbitrary pair, with `e_next` the later level.
    pub fn energy(&mut self, e_before: &[f64], e_next: &[f64], tau: f64) -> f64 {
        let n = e_next.len();
        let d: Vec<f64> = (0..n).map(|i| (e_next[i] - e_before[i]) / tau).collect();
        self.mass.apply(&d, &mut self.scratch);
        let kinetic = 0.5 * dot(&d, &self.scratch);
        self.stiffness.apply(e_before, &mut self.scratch);
        kinetic + 0.5 * dot(e_next, &self.scratch)
    }

    /// Advances `state` by one step with forcing `g^n` (zero if `None`).
    /// Returns the energy `E^{n+1/2}` if `with_energy` is set.
    pub fn step(&mut self, state: &mut TransientState, g: Option<&[f64]>, with_energy: bool) -> Result<Option<f64>> {
        let n = state.e_curr.len();
        let tau = state.tau;
        if self.blowup_reference == 0.0 {
            self.blowup_reference = norm(&state.e_prev).max(norm(&state.e_curr));
        }
        self.stiffness.apply(&state.e_curr, &mut self.ke);
        self.counters.stiffness_applies += 1;
        match g {
            Some(g) => {
                for i in 0..n {
                    self.rhs[i] = g[i] - self.ke[i];
                }
            }
            None => {
                for i in 0..n {
                    self.rhs[i] = -self.ke[i];
                }
            }
        }
        // The previous acceleration is a good starting guess for iterative solves.
        self.mass.solve(&self.rhs, &mut self.acc)?;
        self.counters.mass_solves += 1;
        let t2 = tau * tau;
        for i in 0..n {
            let next = 2.0 * state.e_curr[i] - state.e_prev[i] + t2 * self.acc[i];
            state.e_prev[i] = next;
        }
        std::mem::swap(&mut state.e_prev, &mut state.e_curr);
        state.n += 1;
        self.counters.steps += 1;

        let size = norm(&state.e_curr);
        if !size.is_finite()
            || (self.blowup_reference > 0.0 && size > self.blowup_factor * self.blowup_reference)
        {
            return Err(Error::Instability { step: state.n });
        }

        if !with_energy {
            return Ok(None);
        }
        // ke still holds K e^n, where e^n is now e_prev.
        for i in 0..n {
            self.scratch[i] = (state.e_curr[i] - state.e_prev[i]) / tau;
        }
        let mut md = vec![0.0; n];
        self.mass.apply(&self.scratch, &mut md);
        let kinetic = 0.5 * dot(&self.scratch, &md);
        Ok(Some(kinetic + 0.5 * dot(&state.e_curr, &self.ke)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tau: f64,
    pub t_end: f64,
    /// Keep `e^n` for every `n` divisible by this (0 keeps none).
    pub sample_every: usize,
    pub record_energy: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<FieldVector>,
    pub energy: EnergyTrace,
    pub counters: OpCounters,
    /// Final pair `(e^{N-1}, e^N)`.
    pub last: Option<(Vec<f64>, Vec<f64>)>,
}

/// Runs the scheme from `(e^0, e^1)` up to `e^N`, `N tau >= t_end`.
/// `load(t, g)` fills the forcing at time `t`.
pub fn leapfrog_run(
    mass: &dyn MassOperator,
    stiffness: &dyn LinearOperator,
    load: Option<&dyn Fn(f64, &mut [f64])>,
    e0: Vec<f64>,
    e1: Vec<f64>,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let mut state = TransientState::new(e0, e1, opts.tau, opts.t_end)?;
    let total = state.total_steps();
    let mut lf = Leapfrog::new(mass, stiffness);
    let mut out = Trajectory::default();
    let keep = |n: usize| opts.sample_every > 0 && n % opts.sample_every == 0;
    if keep(0) {
        out.samples.push(FieldVector::at(state.e_prev.clone(), 0.0));
    }
    if keep(1) {
        out.samples.push(FieldVector::at(state.e_curr.clone(), opts.tau));
    }
    if opts.record_energy {
        let (a, b) = (state.e_prev.clone(), state.e_curr.clone());
        out.energy.values.push(lf.energy(&a, &b, opts.tau));
    }
    let mut g = vec![0.0; stiffness.dim()];
    while state.n < total {
        let t = state.time();
        let forcing = match load {
            Some(f) => {
                f(t, &mut g);
                Some(g.as_slice())
            }
            None => None,
        };
        if let Some(e) = lf.step(&mut state, forcing, opts.record_energy)? {
            out.energy.values.push(e);
        }
        if keep(state.n) {
            out.samples.push(FieldVector::at(state.e_curr.clone(), state.time()));
        }
    }
    out.counters = lf.counters();
    out.last = Some((state.e_prev, state.e_curr));
    Ok(out)
}
