//! Column-wise l1 reconstruction and its parallel orchestration.
//!
//! [`BasisPursuit`] solves `min ||x||_1 s.t. A x = y` in two stages. An ADMM
//! (augmented-Lagrangian splitting) iteration alternates between the affine
//! feasible set and the l1 proximal map; every few iterations the current
//! support is refit by least squares and accepted if a dual vector built
//! from the ADMM multipliers certifies it. Exactly sparse columns finish
//! here. Columns that are only compressible have an l1 minimiser with `K`
//! nonzeros whose small entries ADMM resolves slowly, so after a fixed
//! budget the iterate seeds a primal simplex on the split-variable linear
//! program, which terminates with an exact vertex and its dual certificate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::permute::PermutationMap;
use crate::sensing::{MeasurementBatch, SensingMatrix};
use crate::signal::Signal2D;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative tolerance on the ADMM primal residual `||x - z||`.
    pub primal_tolerance: f64,
    /// Relative tolerance on the ADMM dual residual, and the slack allowed
    /// in the optimality certificate `||A^T nu||_inf <= 1 + tol`.
    pub dual_tolerance: f64,
    /// Accepted `||A x - y|| / (1 + ||y||)`.
    pub feasibility_tolerance: f64,
    /// ADMM iterations before switching to the simplex stage. Counted in
    /// `max_iterations` together with simplex pivots.
    pub splitting_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            primal_tolerance: 1e-9,
            dual_tolerance: 1e-8,
            feasibility_tolerance: 1e-8,
            splitting_iterations: 400,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return domain("max_iterations must be at least 1");
        }
        for (name, v) in [
            ("primal_tolerance", self.primal_tolerance),
            ("dual_tolerance", self.dual_tolerance),
            ("feasibility_tolerance", self.feasibility_tolerance),
        ] {
            if !(v > 0.0) {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Feasible and certified optimal by a dual vector.
    Optimal,
    /// ADMM residuals fell below tolerance without a certificate.
    Converged,
    /// Iteration limit reached; the solution holds the best feasible iterate.
    MaxIterations,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        !matches!(self, Self::MaxIterations)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisPursuitSolution {
    pub x: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Dual estimate `nu` for `max y^T nu s.t. ||A^T nu||_inf <= 1`, when
    /// one was formed.
    pub dual: Option<Vec<f64>>,
}

impl BasisPursuitSolution {
    pub fn objective(&self) -> f64 {
        l1(&self.x)
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Basis-pursuit solver bound to one sensing matrix.
///
/// Holds the factor `A^T (A A^T)^{-1}` used by the projection onto
/// `{x : A x = y}`, so one instance serves every column of a batch.
#[derive(Clone, Debug)]
pub struct BasisPursuit<'a> {
    a: &'a SensingMatrix,
    /// `A^T (A A^T)^{-1}`, `M x K` row-major.
    pinv: Vec<f64>,
    opts: SolverOptions,
}

const POLISH_EVERY: usize = 10;
const RHO_INITIAL: f64 = 1.0;
const RHO_BALANCE: f64 = 10.0;
const RHO_STEP: f64 = 2.0;
const CRASH_INDEPENDENCE: f64 = 1e-6;
const REFACTOR_EVERY: usize = 50;
const PIVOT_TOLERANCE: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 50;

struct Vertex {
    x: Vec<f64>,
    dual: Vec<f64>,
    pivots: usize,
    optimal: bool,
}

impl<'a> BasisPursuit<'a> {
    pub fn new(a: &'a SensingMatrix, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let full = a.to_dmatrix();
        let gram = &full * full.transpose();
        let chol = gram.cholesky().ok_or(Error::RankDeficient(a.k()))?;
        // (A A^T)^{-1} A, transposed below
        let w = chol.solve(&full);
        let mut pinv = vec![0.0; a.m() * a.k()];
        for r in 0..a.k() {
            for c in 0..a.m() {
                pinv[c * a.k() + r] = w[(r, c)];
            }
        }
        Ok(Self { a, pinv, opts })
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// `A^T (A A^T)^{-1} v`.
    fn pinv_mul(&self, v: &[f64]) -> Vec<f64> {
        self.pinv
            .chunks_exact(self.a.k())
            .map(|row| row.iter().zip(v).map(|(p, x)| p * x).sum())
            .collect()
    }

    /// `(A A^T)^{-1} A v`.
    fn pinv_t_mul(&self, v: &[f64]) -> Vec<f64> {
        let k = self.a.k();
        let mut out = vec![0.0; k];
        for (row, &vi) in self.pinv.chunks_exact(k).zip(v) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p * vi;
            }
        }
        out
    }

    /// Projection of `v` onto `{x : A x = y}`.
    fn project(&self, v: &[f64], y: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(v);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri -= yi;
        }
        let corr = self.pinv_mul(&r);
        v.iter().zip(&corr).map(|(a, b)| a - b).collect()
    }

    fn residual_ratio(&self, x: &[f64], y: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let r: Vec<f64> = ax.iter().zip(y).map(|(a, b)| a - b).collect();
        l2(&r) / (1.0 + l2(y))
    }

    /// Solves `min ||x||_1 s.t. A x = y`.
    pub fn solve(&self, y: &[f64]) -> Result<BasisPursuitSolution> {
        let (k, m) = (self.a.k(), self.a.m());
        if y.len() != k {
            return domain(format!("measurement vector of length {} for K = {k}", y.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return domain("non-finite measurement");
        }
        let scale = l2(y);
        // zero is then feasible to tolerance, and nothing has a smaller norm
        if scale <= self.opts.feasibility_tolerance * (1.0 + scale) {
            return Ok(BasisPursuitSolution {
                x: vec![0.0; m],
                status: SolveStatus::Optimal,
                iterations: 0,
                dual: Some(vec![0.0; k]),
            });
        }
        let yn: Vec<f64> = y.iter().map(|v| v / scale).collect();
        let least_norm = self.pinv_mul(&yn);
        if k == m {
            // the feasible set is a single point; A^{-T} sign(x) certifies it
            let signs: Vec<f64> = least_norm.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
            return Ok(BasisPursuitSolution {
                x: least_norm.iter().map(|v| v * scale).collect(),
                status: SolveStatus::Optimal,
                iterations: 0,
                dual: Some(self.pinv_t_mul(&signs)),
            });
        }

        let mut rho = RHO_INITIAL;
        let mut x = least_norm;
        let mut z = x.clone();
        let mut u = vec![0.0; m];
        let sqrt_m = (m as f64).sqrt();
        let budget = self.opts.splitting_iterations.min(self.opts.max_iterations);
        let mut used = budget;
        let mut converged = false;

        for it in 1..=budget {
            let v: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
            x = self.project(&v, &yn);
            let z_old = std::mem::take(&mut z);
            z = x
                .iter()
                .zip(&u)
                .map(|(xi, ui)| soft_threshold(xi + ui, 1.0 / rho))
                .collect();
            for i in 0..m {
                u[i] += x[i] - z[i];
            }

            if it % POLISH_EVERY == 0 {
                if let Some((xp, nu)) = self.polish(&z, &u, rho, &yn) {
                    return Ok(BasisPursuitSolution {
                        x: xp.iter().map(|v| v * scale).collect(),
                        status: SolveStatus::Optimal,
                        iterations: it,
                        dual: Some(nu),
                    });
                }
            }

            let r_norm = x.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let s_norm = rho * z.iter().zip(&z_old).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let eps_pri = self.opts.primal_tolerance * (sqrt_m * 1e-3 + l2(&x).max(l2(&z)));
            let eps_dual = self.opts.dual_tolerance * (sqrt_m * 1e-3 + rho * l2(&u));
            if r_norm <= eps_pri && s_norm <= eps_dual {
                converged = true;
                used = it;
                break;
            }

            // residual balancing; u is scaled, so it rescales with rho
            if it % 10 == 0 {
                if r_norm > RHO_BALANCE * s_norm {
                    rho *= RHO_STEP;
                    u.iter_mut().for_each(|v| *v /= RHO_STEP);
                } else if s_norm > RHO_BALANCE * r_norm {
                    rho /= RHO_STEP;
                    u.iter_mut().for_each(|v| *v *= RHO_STEP);
                }
            }
        }

        if let Some((xp, nu)) = self.polish(&z, &u, rho, &yn) {
            return Ok(BasisPursuitSolution {
                x: xp.iter().map(|v| v * scale).collect(),
                status: SolveStatus::Optimal,
                iterations: used,
                dual: Some(nu),
            });
        }
        let pivots_left = self.opts.max_iterations - used;
        let fallback = if converged {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIterations
        };
        if pivots_left == 0 {
            let nu = self.pinv_t_mul(&u.iter().map(|v| v * rho).collect::<Vec<_>>());
            return Ok(BasisPursuitSolution {
                x: x.iter().map(|v| v * scale).collect(),
                status: fallback,
                iterations: used,
                dual: Some(nu),
            });
        }
        let vertex = self.simplex(&x, &yn, pivots_left)?;
        Ok(BasisPursuitSolution {
            x: vertex.x.iter().map(|v| v * scale).collect(),
            status: if vertex.optimal { SolveStatus::Optimal } else { fallback },
            iterations: used + vertex.pivots,
            dual: Some(vertex.dual),
        })
    }

    /// Picks `K` linearly independent atoms, largest `|priority|` first.
    fn crash_basis(&self, priority: &[f64]) -> Option<Vec<usize>> {
        let (k, m) = (self.a.k(), self.a.m());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&p, &q| priority[q].abs().total_cmp(&priority[p].abs()).then(p.cmp(&q)));
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut chosen = Vec::with_capacity(k);
        for i in order {
            let mut r: Vec<f64> = (0..k).map(|row| self.a.get(row, i)).collect();
            let before = l2(&r);
            // two Gram-Schmidt passes keep the test reliable
            for _ in 0..2 {
                for q in &ortho {
                    let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                    r.iter_mut().zip(q).for_each(|(v, qv)| *v -= d * qv);
                }
            }
            let after = l2(&r);
            if after > CRASH_INDEPENDENCE * before {
                ortho.push(r.iter().map(|v| v / after).collect());
                chosen.push(i);
                if chosen.len() == k {
                    return Some(chosen);
                }
            }
        }
        None
    }

    /// Row-major inverse of the signed basis matrix `[s_r a_{atom_r}]`.
    fn basis_inverse(&self, atoms: &[usize], signs: &[f64]) -> Option<Vec<f64>> {
        let k = self.a.k();
        let b = DMatrix::from_fn(k, k, |r, c| self.a.get(r, atoms[c]) * signs[c]);
        let inv = b.try_inverse()?;
        Some(inv.transpose().as_slice().to_vec())
    }

    /// Primal simplex on `min 1^T (p + q) s.t. A (p - q) = y, p, q >= 0`,
    /// started from a basis chosen by the magnitudes of `start`.
    ///
    /// A basis is a set of `K` atoms with signs; every choice of independent
    /// atoms is made feasible by taking the signs of `A_S^{-1} y`, so no
    /// first phase is needed. The dual of a basis is `B^{-T} 1`.
    fn simplex(&self, start: &[f64], y: &[f64], max_pivots: usize) -> Result<Vertex> {
        let (k, m) = (self.a.k(), self.a.m());
        let mut atoms = self.crash_basis(start).ok_or(Error::RankDeficient(k))?;
        let mut signs = vec![1.0; k];
        let mut in_basis = vec![usize::MAX; m];
        for (r, &i) in atoms.iter().enumerate() {
            in_basis[i] = r;
        }
        let price_tol = 0.5 * self.opts.dual_tolerance;

        let refactor = |atoms: &[usize], signs: &mut [f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut binv = self.basis_inverse(atoms, signs).ok_or(Error::RankDeficient(k))?;
            let mut xb: Vec<f64> = binv
                .chunks_exact(k)
                .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
                .collect();
            for r in 0..k {
                if xb[r] < 0.0 {
                    signs[r] = -signs[r];
                    xb[r] = -xb[r];
                    binv[r * k..(r + 1) * k].iter_mut().for_each(|v| *v = -*v);
                }
            }
            Ok((binv, xb))
        };

        let (mut binv, mut xb) = refactor(&atoms, &mut signs)?;
        let mut fresh = true;
        let mut pivots = 0;
        let mut degenerate_run = 0;
        let mut optimal = false;
        let mut nu = vec![0.0; k];

        loop {
            if pivots > 0 && pivots % REFACTOR_EVERY == 0 && !fresh {
                (binv, xb) = refactor(&atoms, &mut signs)?;
                fresh = true;
            }
            nu.iter_mut().for_each(|v| *v = 0.0);
            for row in binv.chunks_exact(k) {
                nu.iter_mut().zip(row).for_each(|(n, b)| *n += b);
            }
            let g = self.a.mul_transpose_vec(&nu);
            let eligible = (0..m).filter(|&i| in_basis[i] == usize::MAX && g[i].abs() > 1.0 + price_tol);
            let entering = if degenerate_run >= BLAND_AFTER {
                eligible.min()
            } else {
                eligible.max_by(|&p, &q| g[p].abs().total_cmp(&g[q].abs()).then(q.cmp(&p)))
            };
            let Some(q) = entering else {
                if fresh {
                    optimal = true;
                    break;
                }
                (binv, xb) = refactor(&atoms, &mut signs)?;
                fresh = true;
                continue;
            };
            if pivots == max_pivots {
                break;
            }

            let s = g[q].signum();
            let d: Vec<f64> = binv
                .chunks_exact(k)
                .map(|row| row.iter().enumerate().map(|(c, b)| b * s * self.a.get(c, q)).sum())
                .collect();
            let d_max = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..k {
                if d[r] <= PIVOT_TOLERANCE * d_max.max(1.0) {
                    continue;
                }
                let theta = xb[r].max(0.0) / d[r];
                let better = match leave {
                    None => true,
                    Some((best, t)) => {
                        if theta < t {
                            true
                        } else if theta == t {
                            if degenerate_run >= BLAND_AFTER {
                                atoms[r] < atoms[best]
                            } else {
                                d[r] > d[best]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((r, theta));
                }
            }
            // the objective is bounded below, so a blocking row exists up to rounding
            let Some((r, theta)) = leave else { break };

            degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
            for i in 0..k {
                xb[i] -= theta * d[i];
            }
            xb[r] = theta;
            let pivot_row: Vec<f64> = binv[r * k..(r + 1) * k].iter().map(|v| v / d[r]).collect();
            for (i, row) in binv.chunks_exact_mut(k).enumerate() {
                if i == r {
                    row.copy_from_slice(&pivot_row);
                } else if d[i] != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= d[i] * p);
                }
            }
            in_basis[atoms[r]] = usize::MAX;
            atoms[r] = q;
            signs[r] = s;
            in_basis[q] = r;
            pivots += 1;
            fresh = false;
        }

        if !fresh {
            (binv, xb) = refactor(&atoms, &mut signs)?;
            nu.iter_mut().for_each(|v| *v = 0.0);
            for row in binv.chunks_exact(k) {
                nu.iter_mut().zip(row).for_each(|(n, b)| *n += b);
            }
        }
        let mut x = vec![0.0; m];
        for r in 0..k {
            x[atoms[r]] = signs[r] * xb[r];
        }
        Ok(Vertex {
            x,
            dual: nu,
            pivots,
            optimal,
        })
    }

    /// Least-squares refit on the support of `z`, returned with its dual
    /// certificate when both feasibility and optimality checks pass.
    fn polish(&self, z: &[f64], u: &[f64], rho: f64, y: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (k, m) = (self.a.k(), self.a.m());
        let support: Vec<usize> = (0..m).filter(|&i| z[i] != 0.0).collect();
        if support.is_empty() || support.len() > k {
            return None;
        }
        let a_s = DMatrix::from_fn(k, support.len(), |r, c| self.a.get(r, support[c]));
        let chol = (a_s.transpose() * &a_s).cholesky()?;
        let yv = DVector::from_column_slice(y);
        let xs = chol.solve(&(a_s.transpose() * &yv));
        let mut x = vec![0.0; m];
        for (c, &i) in support.iter().enumerate() {
            x[i] = xs[c];
        }
        if self.residual_ratio(&x, y) > self.opts.feasibility_tolerance {
            return None;
        }
        if support.iter().any(|&i| x[i] == 0.0) {
            return None;
        }

        // multiplier estimate, corrected so A_S^T nu = sign(x_S) exactly
        let g: Vec<f64> = u.iter().map(|v| v * rho).collect();
        let nu0 = DVector::from_vec(self.pinv_t_mul(&g));
        let signs = DVector::from_iterator(support.len(), support.iter().map(|&i| x[i].signum()));
        let correction = chol.solve(&(signs - a_s.transpose() * &nu0));
        let nu = nu0 + &a_s * correction;
        let nu: Vec<f64> = nu.iter().copied().collect();
        let at_nu = self.a.mul_transpose_vec(&nu);
        if at_nu.iter().all(|v| v.abs() <= 1.0 + self.opts.dual_tolerance) {
            Some((x, nu))
        } else {
            None
        }
    }
}

/// Checks the optimality conditions of a basis-pursuit answer: primal
/// feasibility, dual feasibility `||A^T nu||_inf <= 1 + tol`, and a duality
/// gap `||x||_1 - y^T nu` within `tol` relative to `||x||_1`.
pub fn verify_certificate(
    a: &SensingMatrix,
    y: &[f64],
    solution: &BasisPursuitSolution,
    opts: &SolverOptions,
) -> bool {
    let Some(nu) = &solution.dual else {
        return false;
    };
    let ax = a.mul_vec(&solution.x);
    let res = ax.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if res > opts.feasibility_tolerance * (1.0 + l2(y)) {
        return false;
    }
    let dual_inf = a
        .mul_transpose_vec(nu)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if dual_inf > 1.0 + opts.dual_tolerance {
        return false;
    }
    let primal = solution.objective();
    let dual_value: f64 = y.iter().zip(nu).map(|(a, b)| a * b).sum::<f64>() / dual_inf.max(1.0);
    primal - dual_value <= 10.0 * opts.dual_tolerance * primal.max(f64::MIN_POSITIVE)
}

/// One-off basis-pursuit solve.
pub fn solve_basis_pursuit(a: &SensingMatrix, y: &[f64], opts: &SolverOptions) -> Result<BasisPursuitSolution> {
    BasisPursuit::new(a, *opts)?.solve(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpSolution {
    pub x: Vec<f64>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    pub iterations: usize,
    /// Residual norm after each iteration, starting with `||y||`.
    pub residual_norms: Vec<f64>,
}

/// Residual level, relative to `||y||`, at which OMP stops early.
pub const OMP_RELATIVE_RESIDUAL: f64 = 1e-10;

/// Orthogonal matching pursuit with a least-squares refit per step.
pub fn solve_omp(a: &SensingMatrix, y: &[f64], s_max: usize) -> Result<OmpSolution> {
    let (k, m) = (a.k(), a.m());
    if s_max == 0 || s_max > k {
        return domain(format!("s_max = {s_max} must lie in 1..={k}"));
    }
    if y.len() != k {
        return domain(format!("measurement vector of length {} for K = {k}", y.len()));
    }
    let y_norm = l2(y);
    let mut residual = y.to_vec();
    let mut norms = vec![y_norm];
    let mut support: Vec<usize> = Vec::new();
    let mut x = vec![0.0; m];
    let yv = DVector::from_column_slice(y);

    while support.len() < s_max && l2(&residual) > OMP_RELATIVE_RESIDUAL * y_norm {
        let corr = a.mul_transpose_vec(&residual);
        let pick = (0..m)
            .filter(|i| !support.contains(i))
            .fold(None::<(usize, f64)>, |best, i| match best {
                Some((_, b)) if b >= corr[i].abs() => best,
                _ => Some((i, corr[i].abs())),
            });
        let Some((atom, _)) = pick else { break };
        support.push(atom);

        let a_s = DMatrix::from_fn(k, support.len(), |r, c| a.get(r, support[c]));
        let chol = (a_s.transpose() * &a_s)
            .cholesky()
            .ok_or(Error::RankDeficient(support.len()))?;
        let coef = chol.solve(&(a_s.transpose() * &yv));
        if coef.iter().any(|v| !v.is_finite()) {
            return Err(Error::RankDeficient(support.len()));
        }
        let fit = &a_s * &coef;
        residual = yv.iter().zip(fit.iter()).map(|(a, b)| a - b).collect();
        x.iter_mut().for_each(|v| *v = 0.0);
        for (c, &i) in support.iter().enumerate() {
            x[i] = coef[c];
        }
        norms.push(l2(&residual));
    }
    Ok(OmpSolution {
        x,
        iterations: support.len(),
        support,
        residual_norms: norms,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelReconstruction {
    pub signal: Signal2D,
    pub statuses: Vec<SolveStatus>,
    pub iterations: Vec<usize>,
}

impl ParallelReconstruction {
    pub fn all_converged(&self) -> bool {
        self.statuses.iter().all(|s| s.is_converged())
    }
}

fn check_batch(a: &SensingMatrix, batch: &MeasurementBatch) -> Result<()> {
    if batch.k() != a.k() || batch.signal_rows() != a.m() {
        return Err(Error::ShapeMismatch {
            expected: (a.k(), a.m()),
            found: (batch.k(), batch.signal_rows()),
        });
    }
    Ok(())
}

/// Reconstructs every measurement column independently on `workers`
/// threads. Each column runs the same sequential solve, so the result does
/// not depend on the worker count or scheduling.
pub fn reconstruct_parallel(
    a: &SensingMatrix,
    batch: &MeasurementBatch,
    opts: &SolverOptions,
    workers: usize,
) -> Result<ParallelReconstruction> {
    check_batch(a, batch)?;
    if workers == 0 {
        return domain("worker count must be at least 1");
    }
    let solver = BasisPursuit::new(a, *opts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let solved: Vec<Result<BasisPursuitSolution>> = pool.install(|| {
        (0..batch.n())
            .into_par_iter()
            .map(|j| solver.solve(batch.column(j)))
            .collect()
    });
    let solved: Vec<BasisPursuitSolution> = solved.into_iter().collect::<Result<_>>()?;
    let statuses = solved.iter().map(|s| s.status).collect();
    let iterations = solved.iter().map(|s| s.iterations).collect();
    let columns: Vec<Vec<f64>> = solved.into_iter().map(|s| s.x).collect();
    Ok(ParallelReconstruction {
        signal: Signal2D::from_columns(&columns)?,
        statuses,
        iterations,
    })
}

/// Parallel reconstruction followed by the inverse of the permutation the
/// measurements were taken under.
pub fn reconstruct_2d(
    a: &SensingMatrix,
    batch: &MeasurementBatch,
    p: &PermutationMap,
    opts: &SolverOptions,
    workers: usize,
) -> Result<ParallelReconstruction> {
    if batch.perm_tag != p.tag() {
        return Err(Error::TagMismatch {
            measured: batch.perm_tag.clone(),
            given: p.tag().to_owned(),
        });
    }
    let mut out = reconstruct_parallel(a, batch, opts, workers)?;
    out.signal = p.inverse().apply(&out.signal)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permute::{zigzag_permutation, IDENTITY_TAG};
    use crate::rng::Stream;
    use crate::sensing::{gaussian_sensing, sample_parallel};

    fn planted(m: usize, s: usize, seed: u64) -> Vec<f64> {
        let mut rng = Stream::new(seed, 1);
        let mut x = vec![0.0; m];
        let mut placed = 0;
        while placed < s {
            let i = rng.below(m);
            if x[i] == 0.0 {
                x[i] = rng.gaussian() + rng.gaussian().signum();
                placed += 1;
            }
        }
        x
    }

    #[test]
    fn zero_measurements_give_zero() {
        let a = gaussian_sensing(10, 30, 1).unwrap();
        let sol = solve_basis_pursuit(&a, &[0.0; 10], &SolverOptions::default()).unwrap();
        assert_eq!(sol.x, vec![0.0; 30]);
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn square_system_is_inverted() {
        let a = gaussian_sensing(12, 12, 4).unwrap();
        let x: Vec<f64> = (0..12).map(|i| i as f64 - 5.5).collect();
        let y = a.mul_vec(&x);
        let sol = solve_basis_pursuit(&a, &y, &SolverOptions::default()).unwrap();
        for (u, v) in sol.x.iter().zip(&x) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn planted_recovery_and_certificate() {
        let opts = SolverOptions::default();
        let a = gaussian_sensing(40, 100, 7).unwrap();
        for seed in 0..10 {
            let x = planted(100, 5, seed);
            let y = a.mul_vec(&x);
            let sol = solve_basis_pursuit(&a, &y, &opts).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            assert!(verify_certificate(&a, &y, &sol, &opts));
            let err = sol.x.iter().zip(&x).fold(0.0f64, |e, (u, v)| e.max((u - v).abs()));
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let a = gaussian_sensing(4, 8, 1).unwrap();
        assert!(solve_basis_pursuit(&a, &[1.0; 3], &SolverOptions::default()).is_err());
        let mut opts = SolverOptions::default();
        opts.max_iterations = 0;
        assert!(solve_basis_pursuit(&a, &[1.0; 4], &opts).is_err());
    }

    #[test]
    fn iteration_cap_keeps_a_feasible_iterate() {
        let a = gaussian_sensing(20, 60, 2).unwrap();
        let mut rng = Stream::new(3, 0);
        let y: Vec<f64> = (0..20).map(|_| rng.gaussian()).collect();
        let opts = SolverOptions {
            max_iterations: 3,
            ..SolverOptions::default()
        };
        let sol = solve_basis_pursuit(&a, &y, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIterations);
        let r: f64 = a.mul_vec(&sol.x).iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(r <= 1e-8 * (1.0 + l2(&y)));
    }

    #[test]
    fn omp_examples() {
        let a = gaussian_sensing(30, 80, 5).unwrap();
        let zero = solve_omp(&a, &[0.0; 30], 5).unwrap();
        assert_eq!(zero.iterations, 0);
        assert_eq!(zero.x, vec![0.0; 80]);

        let mut x = vec![0.0; 80];
        x[17] = -2.5;
        let one = solve_omp(&a, &a.mul_vec(&x), 5).unwrap();
        assert_eq!(one.iterations, 1);
        assert_eq!(one.support, vec![17]);
        assert!((one.x[17] + 2.5).abs() < 1e-12);

        for seed in 0..10 {
            let x = planted(80, 4, seed);
            let y = a.mul_vec(&x);
            let omp = solve_omp(&a, &y, 12).unwrap();
            assert!(omp.residual_norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let bp = solve_basis_pursuit(&a, &y, &SolverOptions::default()).unwrap();
            for i in 0..80 {
                assert!((omp.x[i] - bp.x[i]).abs() < 1e-4, "seed {seed}");
            }
        }
        assert!(solve_omp(&a, &[1.0; 30], 31).is_err());
        assert!(solve_omp(&a, &[1.0; 30], 0).is_err());
    }

    #[test]
    fn omp_rank_deficiency() {
        // two identical atoms: after picking one the residual is orthogonal to both
        let a = SensingMatrix::from_entries(2, 3, vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let sol = solve_omp(&a, &[1.0, 1.0], 2).unwrap();
        assert_eq!(sol.support.len(), 2);
        let b = SensingMatrix::from_entries(2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(solve_omp(&b, &[1.0, 1.0], 2), Err(Error::RankDeficient(2))));
    }

    #[test]
    fn parallel_matches_serial_and_is_worker_independent() {
        let a = gaussian_sensing(24, 64, 11).unwrap();
        let mut cols = Vec::new();
        for j in 0..12 {
            cols.push(planted(64, 1 + j % 5, j as u64));
        }
        let x = Signal2D::from_columns(&cols).unwrap();
        let batch = sample_parallel(&a, &x, IDENTITY_TAG).unwrap();
        let opts = SolverOptions::default();
        let one = reconstruct_parallel(&a, &batch, &opts, 1).unwrap();
        let four = reconstruct_parallel(&a, &batch, &opts, 4).unwrap();
        assert_eq!(one, four);
        for j in 0..12 {
            let solo = solve_basis_pursuit(&a, batch.column(j), &opts).unwrap();
            assert_eq!(one.signal.column(j + 1), solo.x);
        }
        assert!(reconstruct_parallel(&a, &batch, &opts, 0).is_err());
    }

    #[test]
    fn zero_batch_gives_zero_signal() {
        let a = gaussian_sensing(8, 16, 1).unwrap();
        let batch = sample_parallel(&a, &Signal2D::zeros(16, 5), IDENTITY_TAG).unwrap();
        let out = reconstruct_parallel(&a, &batch, &SolverOptions::default(), 2).unwrap();
        assert_eq!(out.signal, Signal2D::zeros(16, 5));
    }

    #[test]
    fn reconstruct_2d_checks_tags() {
        let a = gaussian_sensing(8, 16, 1).unwrap();
        let x = Signal2D::zeros(16, 16);
        let batch = sample_parallel(&a, &x, IDENTITY_TAG).unwrap();
        let zz = zigzag_permutation(16, 16);
        assert!(matches!(
            reconstruct_2d(&a, &batch, &zz, &SolverOptions::default(), 1),
            Err(Error::TagMismatch { .. })
        ));
        let id = PermutationMap::identity(16, 16);
        let two_d = reconstruct_2d(&a, &batch, &id, &SolverOptions::default(), 1).unwrap();
        let flat = reconstruct_parallel(&a, &batch, &SolverOptions::default(), 1).unwrap();
        assert_eq!(two_d.signal, flat.signal);
    }
}
