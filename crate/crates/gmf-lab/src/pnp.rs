//! One-dimensional Poisson-Nernst-Planck cell between blocking electrodes.
//!
//! Everything is nondimensional: the elementary charge and the thermal
//! energy are 1, so valences enter fluxes directly and the Einstein relation
//! makes each mobility equal to its diffusivity. The model on x in [0, L]:
//!
//! ```text
//! dc_p/dt = -dJ_p/dx,   J_p = -D_p (dc_p/dx + z_p c_p dphi/dx)
//! d2phi/dx2 = -rho / eps0,   rho = sum_p z_p c_p
//! phi(0) = U0, phi(L) = -U0,   J_p = 0 at both walls
//! ```
//!
//! Discretization: concentrations live on N cell centers, the potential on
//! the N+1 nodes between them. Fluxes use the exponential-fitted
//! (Scharfetter-Gummel) form, which is exact for the Boltzmann profile on
//! each face: at steady state the discrete solution therefore satisfies the
//! Nernst relation between any two cells to rounding, independent of grid
//! resolution. Time stepping is implicit Euler with a Gummel split per step
//! (alternate the Poisson solve and one implicit transport solve per species
//! until the iterates agree).
//!
//! Stability notes: the per-species transport matrix is an M-matrix, so each
//! inner solve preserves positivity for any dt. What limits dt is the outer
//! Gummel fixed point; for the cells exercised here (|U0| up to ~2 thermal
//! units, Debye length down to ~L/40) it converges for dt up to order 1 in
//! units of L^2/D, and `solve_steady` halves dt and retries on the rare
//! failure.

use crate::error::{Error, Result};

/// One mobile species.
#[derive(Debug, Clone, Copy)]
pub struct Species {
    /// Valence (signed).
    pub z: f64,
    /// Diffusivity.
    pub d: f64,
    /// Uniform initial (bulk) concentration.
    pub c0: f64,
}

/// Geometry, permittivity, drive, and species table.
#[derive(Debug, Clone)]
pub struct PnpSystem {
    /// Domain length.
    pub length: f64,
    /// Number of concentration cells (the potential gets one more node).
    pub cells: usize,
    /// Permittivity in the nondimensional Poisson equation.
    pub eps0: f64,
    /// Electrode potential: phi(0) = U0, phi(L) = -U0.
    pub u0: f64,
    pub species: Vec<Species>,
}

impl PnpSystem {
    /// Symmetric binary electrolyte (z = +-1, equal D and bulk density).
    pub fn symmetric_binary(length: f64, cells: usize, eps0: f64, u0: f64, d: f64, c0: f64) -> Self {
        PnpSystem {
            length,
            cells,
            eps0,
            u0,
            species: vec![
                Species { z: 1.0, d, c0 },
                Species { z: -1.0, d, c0 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::Config(format!("cell length must be positive, got {}", self.length)));
        }
        if self.cells < 4 {
            return Err(Error::Config(format!("need at least 4 cells, got {}", self.cells)));
        }
        if !(self.eps0 > 0.0) {
            return Err(Error::Config(format!("permittivity must be positive, got {}", self.eps0)));
        }
        if !self.u0.is_finite() {
            return Err(Error::Config("electrode potential must be finite".into()));
        }
        if self.species.is_empty() {
            return Err(Error::Config("at least one species is required".into()));
        }
        for (p, s) in self.species.iter().enumerate() {
            if !(s.d > 0.0) {
                return Err(Error::Config(format!("species {p}: diffusivity must be positive")));
            }
            if !(s.c0 >= 0.0) {
                return Err(Error::Config(format!("species {p}: bulk concentration must be non-negative")));
            }
            if !s.z.is_finite() || s.z == 0.0 {
                return Err(Error::Config(format!("species {p}: valence must be finite and nonzero")));
            }
        }
        let net: f64 = self.species.iter().map(|s| s.z * s.c0).sum();
        if net.abs() > 1e-12 * self.species.iter().map(|s| s.z.abs() * s.c0).sum::<f64>().max(1e-30) {
            return Err(Error::Config(format!(
                "initial state is not electroneutral: sum z*c0 = {net:e}"
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    /// Cell-center coordinate.
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    /// Uniform initial state with a consistent potential.
    pub fn initial_state(&self) -> Result<PnpState> {
        self.validate()?;
        let conc: Vec<Vec<f64>> = self
            .species
            .iter()
            .map(|s| vec![s.c0; self.cells])
            .collect();
        let phi = self.solve_poisson(&conc)?;
        Ok(PnpState { time: 0.0, conc, phi })
    }

    /// Net charge density per cell: `sum_p z_p c_p`.
    pub fn charge_density(&self, conc: &[Vec<f64>]) -> Vec<f64> {
        let mut rho = vec![0.0; self.cells];
        for (s, c) in self.species.iter().zip(conc.iter()) {
            for (r, &ci) in rho.iter_mut().zip(c.iter()) {
                *r += s.z * ci;
            }
        }
        rho
    }

    /// Potential from a raw cell-centered charge density. Dirichlet values
    /// are pinned at the boundary nodes; interior nodes see the average of
    /// the two adjacent cell charges.
    pub fn solve_poisson_rho(&self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.cells {
            return Err(Error::shape(
                "solve_poisson",
                format!("{} cells", self.cells),
                format!("{} cells", rho.len()),
            ));
        }
        let n = self.cells;
        let h = self.h();
        let mut phi = vec![0.0; n + 1];
        phi[0] = self.u0;
        phi[n] = -self.u0;
        if n == 1 {
            return Ok(phi);
        }
        // Interior nodes 1..n solve -phi'' = rho/eps0 via
        // -phi[i-1] + 2 phi[i] - phi[i+1] = h^2 rho_node_i / eps0.
        let m = n - 1;
        let a = vec![-1.0; m.saturating_sub(1)]; // sub
        let b = vec![2.0; m]; // diag
        let c = vec![-1.0; m.saturating_sub(1)]; // super
        let mut d = vec![0.0; m];
        for (k, dk) in d.iter_mut().enumerate() {
            let i = k + 1;
            let rho_node = 0.5 * (rho[i - 1] + rho[i]);
            *dk = h * h * rho_node / self.eps0;
        }
        d[0] += self.u0;
        d[m - 1] += -self.u0;
        let sol = solve_tridiagonal(&a, &b, &c, &d)?;
        phi[1..n].copy_from_slice(&sol);
        Ok(phi)
    }

    /// Potential consistent with the given concentrations.
    pub fn solve_poisson(&self, conc: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.solve_poisson_rho(&self.charge_density(conc))
    }

    /// Max-norm residual of the h^2-scaled interior Poisson equations.
    pub fn poisson_residual(&self, phi: &[f64], conc: &[Vec<f64>]) -> f64 {
        let rho = self.charge_density(conc);
        let h = self.h();
        let mut worst: f64 = 0.0;
        for i in 1..self.cells {
            let rho_node = 0.5 * (rho[i - 1] + rho[i]);
            let r = (-phi[i - 1] + 2.0 * phi[i] - phi[i + 1]) - h * h * rho_node / self.eps0;
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Potential interpolated to a cell center.
    pub fn phi_center(&self, phi: &[f64], i: usize) -> f64 {
        0.5 * (phi[i] + phi[i + 1])
    }

    /// Potential drop across interior face `f` (between cells f-1 and f),
    /// measured center to center.
    fn dphi_face(&self, phi: &[f64], f: usize) -> f64 {
        0.5 * (phi[f + 1] - phi[f - 1])
    }

    /// All interior face fluxes for one species (index 1..cells-1; the two
    /// wall faces are blocking and carry zero flux by construction).
    pub fn face_fluxes(&self, phi: &[f64], sp: &Species, c: &[f64]) -> Vec<f64> {
        let h = self.h();
        (1..self.cells)
            .map(|f| sg_flux(c[f - 1], c[f], self.dphi_face(phi, f), sp.d, sp.z, h))
            .collect()
    }

    /// One implicit-Euler step of length dt.
    pub fn transient_step(&self, state: &PnpState, dt: f64) -> Result<PnpState> {
        self.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let mut guess = state.conc.clone();
        let mut last_rel = f64::INFINITY;
        // Under-relaxation on the outer alternation only; each returned state
        // is an exact transport solve, so conservation never depends on it.
        let mut damping = 1.0_f64;

        for _sweep in 0..MAX_GUMMEL_SWEEPS {
            let phi = self.solve_poisson(&guess)?;
            let next = self.implicit_transport(&state.conc, &phi, dt)?;
            let mut rel: f64 = 0.0;
            for (p, (new_c, old_guess)) in next.iter().zip(guess.iter()).enumerate() {
                let scale = self.species[p]
                    .c0
                    .max(new_c.iter().fold(0.0_f64, |m, &v| m.max(v.abs())))
                    .max(1e-30);
                for (a, b) in new_c.iter().zip(old_guess.iter()) {
                    rel = rel.max((a - b).abs() / scale);
                }
            }
            if rel < GUMMEL_TOL {
                let phi = self.solve_poisson(&next)?;
                return Ok(PnpState {
                    time: state.time + dt,
                    conc: next,
                    phi,
                });
            }
            if rel > last_rel {
                damping = (damping * 0.5).max(0.05);
            }
            for (g, nx) in guess.iter_mut().zip(next.iter()) {
                for (gv, &nv) in g.iter_mut().zip(nx.iter()) {
                    *gv += damping * (nv - *gv);
                }
            }
            last_rel = rel;
        }
        Err(Error::Convergence {
            residual: last_rel,
            detail: format!("Gummel split did not settle within {MAX_GUMMEL_SWEEPS} sweeps at dt={dt}"),
        })
    }

    /// Solve the implicit FV transport system for every species with the
    /// potential frozen: for cell i, `c_i + (dt/h)(J_{i+1} - J_i) = c_old_i`
    /// with the fluxes linear in the unknown c. Row sums telescope, so the
    /// cell total of each returned profile matches `c_old` to rounding.
    fn implicit_transport(&self, c_old: &[Vec<f64>], phi: &[f64], dt: f64) -> Result<Vec<Vec<f64>>> {
        let n = self.cells;
        let h = self.h();
        let mut next = Vec::with_capacity(self.species.len());
        for (sp, old) in self.species.iter().zip(c_old.iter()) {
            let mut a = vec![0.0; n];
            let mut b = vec![1.0; n];
            let mut cc = vec![0.0; n];
            let r = dt * sp.d / (h * h);
            for f in 1..n {
                let psi = sp.z * self.dphi_face(phi, f);
                let (bl, br) = (bernoulli(psi), bernoulli(-psi));
                // Face f carries J = (D/h)(B(psi) c_{f-1} - B(-psi) c_f);
                // it leaves cell f-1 and enters cell f.
                b[f - 1] += r * bl;
                cc[f - 1] -= r * br;
                a[f] -= r * bl;
                b[f] += r * br;
            }
            next.push(solve_tridiagonal(&a[1..], &b, &cc[..n - 1], old)?);
        }
        Ok(next)
    }

    /// March to steady state with an adaptively growing dt.
    ///
    /// Convergence requires both the concentration change rate
    /// `max |dc| / (scale * dt)` and the largest interior face flux to drop
    /// below `1e-10`.
    pub fn solve_steady(&self) -> Result<(PnpState, SteadyReport)> {
        self.validate()?;
        let mut state = self.initial_state()?;
        let mut dt = 1e-3 * self.length * self.length;
        let dt_min = dt * 1e-6;
        let dt_max = 50.0 * self.length * self.length;
        let mut steps = 0usize;

        for _ in 0..MAX_STEADY_STEPS {
            match self.transient_step(&state, dt) {
                Ok(next) => {
                    steps += 1;
                    let mut rate: f64 = 0.0;
                    for (p, (new_c, old_c)) in next.conc.iter().zip(state.conc.iter()).enumerate() {
                        let scale = self.species[p].c0.max(1e-30);
                        for (a, b) in new_c.iter().zip(old_c.iter()) {
                            rate = rate.max((a - b).abs() / (scale * dt));
                        }
                    }
                    let max_flux = self.max_abs_flux(&next);
                    state = next;
                    if rate < STEADY_TOL && max_flux < STEADY_TOL {
                        return Ok((
                            state,
                            SteadyReport {
                                steps,
                                change_rate: rate,
                                max_flux,
                            },
                        ));
                    }
                    dt = (dt * 1.5).min(dt_max);
                }
                Err(Error::Convergence { .. }) if dt > dt_min => {
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::Convergence {
            residual: self.max_abs_flux(&state),
            detail: format!("steady march still moving after {MAX_STEADY_STEPS} attempts"),
        })
    }

    /// Largest interior face flux over all species.
    pub fn max_abs_flux(&self, state: &PnpState) -> f64 {
        let mut worst: f64 = 0.0;
        for (sp, c) in self.species.iter().zip(state.conc.iter()) {
            for j in self.face_fluxes(&state.phi, sp, c) {
                worst = worst.max(j.abs());
            }
        }
        worst
    }

    /// Total amount of species p (cell sum times h).
    pub fn total_mass(&self, state: &PnpState, p: usize) -> f64 {
        state.conc[p].iter().sum::<f64>() * self.h()
    }

    /// Deviation from the Nernst relation between cells i1 and i2:
    /// `|(phi(x1) - phi(x2)) - (1/z_p) ln(c_p(x2)/c_p(x1))|`,
    /// potentials taken at cell centers.
    pub fn nernst_check(&self, state: &PnpState, p: usize, i1: usize, i2: usize) -> Result<f64> {
        if p >= self.species.len() {
            return Err(Error::Contract(format!("species index {p} out of range")));
        }
        if i1 >= self.cells || i2 >= self.cells {
            return Err(Error::Contract(format!(
                "cell pair ({i1}, {i2}) out of range for {} cells",
                self.cells
            )));
        }
        let c1 = state.conc[p][i1];
        let c2 = state.conc[p][i2];
        if c1 <= 0.0 || c2 <= 0.0 {
            return Err(Error::Domain(format!(
                "Nernst relation undefined at non-positive concentration (c[{i1}]={c1:e}, c[{i2}]={c2:e})"
            )));
        }
        let dphi = self.phi_center(&state.phi, i1) - self.phi_center(&state.phi, i2);
        Ok((dphi - (c2 / c1).ln() / self.species[p].z).abs())
    }

    /// Location where the node potential crosses zero, by linear
    /// interpolation; `None` when it never changes sign.
    pub fn phi_zero_crossing(&self, state: &PnpState) -> Option<f64> {
        let h = self.h();
        for i in 0..self.cells {
            let (a, b) = (state.phi[i], state.phi[i + 1]);
            if a == 0.0 {
                return Some(i as f64 * h);
            }
            if a * b < 0.0 {
                return Some((i as f64 + a / (a - b)) * h);
            }
        }
        if state.phi[self.cells] == 0.0 {
            Some(self.length)
        } else {
            None
        }
    }
}

/// Mobile-charge state: per-species cell concentrations plus node potentials.
#[derive(Debug, Clone)]
pub struct PnpState {
    pub time: f64,
    /// `conc[p][i]` is species p in cell i (length `cells`).
    pub conc: Vec<Vec<f64>>,
    /// Node potentials (length `cells + 1`).
    pub phi: Vec<f64>,
}

/// How the steady march ended.
#[derive(Debug, Clone, Copy)]
pub struct SteadyReport {
    pub steps: usize,
    /// Final `max |dc| / (scale * dt)`.
    pub change_rate: f64,
    /// Final largest interior face flux.
    pub max_flux: f64,
}

const MAX_GUMMEL_SWEEPS: usize = 500;
// Tighter than the 1e-10 steady gates on purpose: the state inherits an
// O(GUMMEL_TOL * D / h) flux floor from the inner iteration, and that floor
// must sit well below the 1e-10 flux criterion.
const GUMMEL_TOL: f64 = 1e-13;
const MAX_STEADY_STEPS: usize = 100_000;
const STEADY_TOL: f64 = 1e-10;

/// Bernoulli function B(x) = x / (e^x - 1), series-continued through 0.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        // B(x) = 1 - x/2 + x^2/12 - x^4/720 + ...; truncation < 1e-22 here.
        1.0 - 0.5 * x + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Exponential-fitted face flux for `J = -D (dc/dx + z c dphi/dx)` between
/// two cell centers a distance `h` apart with potential drop `dphi`
/// (right minus left):
///
/// ```text
/// J = (D/h) * (B(psi) c_left - B(-psi) c_right),   psi = z * dphi
/// ```
///
/// Limits: `dphi = 0` gives the central diffusive flux `-D (c_r - c_l) / h`;
/// large |psi| upwinds onto the donor cell; the Boltzmann ratio
/// `c_r/c_l = exp(-psi)` gives zero flux to rounding.
pub fn sg_flux(c_left: f64, c_right: f64, dphi: f64, d: f64, z: f64, h: f64) -> f64 {
    let psi = z * dphi;
    (d / h) * (bernoulli(psi) * c_left - bernoulli(-psi) * c_right)
}

/// Thomas algorithm for a tridiagonal system. `sub` and `sup` have length
/// n-1, `diag` and `rhs` length n. Fails on a vanishing pivot.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || sub.len() != n - 1 || sup.len() != n - 1 || rhs.len() != n {
        return Err(Error::Contract(format!(
            "tridiagonal bands disagree: sub {}, diag {}, sup {}, rhs {}",
            sub.len(),
            n,
            sup.len(),
            rhs.len()
        )));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::Contract("tridiagonal solve hit a zero pivot".into()));
    }
    c[0] = sup.first().copied().unwrap_or(0.0) / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i - 1] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::Contract("tridiagonal solve hit a zero pivot".into()));
        }
        if i < n - 1 {
            c[i] = sup[i] / pivot;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}
