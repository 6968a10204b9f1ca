use std::sync::Arc;

use rayon::prelude::*;

use super::field::{RadialField, TailModel};
use super::grid::{cubic_basis, stencil_start, RadialGrid};
use super::kernel::{KernelProfile, Normalization};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, GaussLegendre, QuadOptions};
use crate::real::Real;

/// Relative tolerance of every cell moment.
const CELL_REL_TOL: f64 = 1e-12;
/// Per-cell budget of kernel evaluations.
const CELL_MAX_EVALS: usize = 1_000_000;
/// Beyond `r_max e^{TAIL_SPAN}` the kernel is replaced by its far-field limit.
const TAIL_SPAN: f64 = 12.0;

/// Dense discretization of `f -> c int |x - y|^{alpha - n} f(|y|) dy` on a
/// [`RadialGrid`], where `c` is set by the [`Normalization`].
///
/// Entries are product-integration weights: the field is interpolated by
/// piecewise cubics in `ln r` and each cell is integrated exactly against the
/// kernel, including the integrable diagonal singularity. The constant inner
/// extension below `r_min` is folded into column 0. The power-law tail beyond
/// `r_max` depends on the field's tail model and is added in [`apply`](Self::apply).
#[derive(Debug, Clone)]
pub struct KernelOperator<T> {
    grid: Arc<RadialGrid<T>>,
    n: u32,
    alpha: T,
    normalization: Normalization,
    scale: T,
    matrix: Vec<T>,
    tail_nodes: Vec<T>,
    tail_weights: Vec<T>,
    tail_table: Vec<T>,
}

fn profile_integral<T: Real>(
    profile: &KernelProfile<T>,
    lo: T,
    hi: T,
    weight: impl Fn(T) -> T,
) -> Result<T> {
    let mut failure = None;
    let q = integrate(
        |tau| match profile.eval(tau) {
            Ok(k) => k * weight(tau),
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        },
        &[lo, hi],
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: CELL_REL_TOL,
            max_evals: CELL_MAX_EVALS,
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(q.value),
    }
}

/// Composite rule in `sigma = ln(s / r_max)` on `[0, TAIL_SPAN]`, graded
/// geometrically towards `sigma = 0` where the last node's kernel is singular.
fn tail_rule<T: Real>() -> (Vec<T>, Vec<T>) {
    let mut bps: Vec<f64> = vec![0.0];
    bps.extend((1..=50).rev().map(|k| 0.5f64.powi(k)));
    let mut x = 1.0;
    while x <= TAIL_SPAN + 1e-9 {
        bps.push(x);
        x += 0.5;
    }
    let gl = GaussLegendre::<T>::new(8);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in bps.windows(2) {
        for (x, wt) in gl.mapped(T::lit(w[0]), T::lit(w[1])) {
            nodes.push(x);
            weights.push(wt);
        }
    }
    (nodes, weights)
}

impl<T: Real> KernelOperator<T> {
    /// Assembles the operator. Rows are built in parallel.
    ///
    /// Kernel moments are always computed in `f64` and rounded to `T`: the
    /// profile spans many orders of magnitude and its quadrature tolerance is
    /// set for double precision.
    pub fn assemble(grid: Arc<RadialGrid<T>>, alpha: T, normalization: Normalization) -> Result<Self> {
        let n = grid.dim();
        KernelProfile::new(n, alpha)?;
        let profile = KernelProfile::new(n, alpha.as_f64())?;
        let count = grid.len();
        let h = grid.log_step().as_f64();
        let scale = normalization.constant(n, alpha);

        // Cell moments h int_0^1 k((d + x) h) x^k dx for d = -(count-1) ..= count-2.
        let moments: Vec<[T; 4]> = (0..2 * count - 2)
            .into_par_iter()
            .map(|idx| {
                let lo = (idx as f64 - (count - 1) as f64) * h;
                let hi = lo + h;
                let mut out = [T::zero(); 4];
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = T::lit(profile_integral(&profile, lo, hi, |tau| ((tau - lo) / h).powi(k as i32))?);
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let moment = |d: isize| &moments[(d + count as isize - 1) as usize];

        // int_{-inf}^{-(count-1) h} k: numeric over a finite stretch, then the
        // leading-order e^{n tau} tail.
        let nf = n as f64;
        let edge = -((count - 1) as f64) * h;
        let stretch = 40.0 / nf;
        let far_left = T::lit(
            profile_integral(&profile, edge - stretch, edge, |_| 1.0)?
                + profile.far_coefficient() * (nf * (edge - stretch)).exp() / nf,
        );
        // inner[i] = int_{-inf}^{-i h} k
        let mut inner = vec![T::zero(); count];
        let mut acc = far_left;
        for d in -(count as isize - 1)..0 {
            let i = (-d - 1) as usize;
            acc = acc + moment(d)[0];
            inner[i] = acc;
        }

        let bases: Vec<[[f64; 4]; 4]> = (0..count - 1).map(|c| cubic_basis(c, count)).collect();
        let mut matrix = vec![T::zero(); count * count];
        matrix.par_chunks_mut(count).enumerate().for_each(|(i, row)| {
            for (c, basis) in bases.iter().enumerate() {
                let mu = moment(c as isize - i as isize);
                let start = stencil_start(c, count);
                for (m, coeffs) in basis.iter().enumerate() {
                    let w: T = coeffs.iter().zip(mu).map(|(&b, &mk)| T::lit(b) * mk).sum();
                    row[start + m] = row[start + m] + w;
                }
            }
            row[0] = row[0] + inner[i];
            let factor = scale * grid.nodes()[i].powf(alpha);
            for x in row.iter_mut() {
                *x = *x * factor;
            }
        });

        let (tail_nodes, tail_weights) = tail_rule::<f64>();
        let m = tail_nodes.len();
        let mut tail_table = vec![T::zero(); count * m];
        tail_table
            .par_chunks_mut(m)
            .enumerate()
            .try_for_each(|(i, row)| -> Result<()> {
                let offset = (count - 1 - i) as f64 * h;
                for (slot, &sigma) in row.iter_mut().zip(&tail_nodes) {
                    // Scaled by e^{-alpha (offset + sigma)} to stay in range for
                    // narrow types; restored in tail_contribution.
                    *slot = T::lit(profile.eval(offset + sigma)? * (-alpha.as_f64() * (offset + sigma)).exp());
                }
                Ok(())
            })?;
        let tail_nodes: Vec<T> = tail_nodes.into_iter().map(T::lit).collect();
        let tail_weights: Vec<T> = tail_weights.into_iter().map(T::lit).collect();

        Ok(Self {
            grid,
            n,
            alpha,
            normalization,
            scale,
            matrix,
            tail_nodes,
            tail_weights,
            tail_table,
        })
    }

    /// The same discretization under another normalization, without reassembly.
    pub fn renormalized(&self, normalization: Normalization) -> Self {
        let scale = normalization.constant(self.n, self.alpha);
        let ratio = scale / self.scale;
        Self {
            normalization,
            scale,
            matrix: self.matrix.iter().map(|&x| x * ratio).collect(),
            ..self.clone()
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }
    pub fn dim(&self) -> u32 {
        self.n
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
    /// Constant multiplying the plain kernel.
    pub fn scale(&self) -> T {
        self.scale
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
    pub fn entry(&self, i: usize, j: usize) -> T {
        self.matrix[i * self.len() + j]
    }
    pub fn row(&self, i: usize) -> &[T] {
        let n = self.len();
        &self.matrix[i * n..(i + 1) * n]
    }

    /// Contribution of the power-law extension beyond `r_max` at every node,
    /// for a tail starting from the value `last`.
    pub fn tail_contribution(&self, last: T, tail: TailModel<T>) -> Result<Vec<T>> {
        if !(tail.exponent > self.alpha) {
            return Err(Error::DivergentTail {
                exponent: tail.exponent.as_f64(),
                alpha: self.alpha.as_f64(),
            });
        }
        let count = self.len();
        let log_rmax = self.grid.r_max().ln();
        let lambda = tail.log_power;
        if lambda != T::zero() && !(log_rmax > T::zero()) {
            return Err(Error::Validation("log-corrected tails need rMax > 1".into()));
        }
        // The table is stored divided by e^{alpha (offset + sigma)}.
        let shape = |sigma: T| -> T {
            let mut v = (-(tail.exponent - self.alpha) * sigma).exp();
            if lambda != T::zero() {
                v = v * (T::one() + sigma / log_rmax).powf(lambda);
            }
            v
        };
        let shapes: Vec<T> = self
            .tail_nodes
            .iter()
            .zip(&self.tail_weights)
            .map(|(&s, &w)| w * shape(s))
            .collect();

        // int_{SPAN}^inf e^{-mu sigma} (1 + sigma / L)^lambda d sigma
        let span = TAIL_SPAN;
        let mu = (tail.exponent - self.alpha).as_f64();
        let far = crate::quadrature::exp_log_tail(mu, lambda.as_f64(), log_rmax.as_f64(), span);
        let far = T::lit(far);
        let coeff = self.grid.dim();
        let s_full: T = crate::real::sphere_area(coeff);
        let m = self.tail_nodes.len();
        // r_i^alpha e^{alpha offset_i} = r_max^alpha for every row.
        let prefactor = self.scale * self.grid.r_max().powf(self.alpha) * last;

        Ok((0..count)
            .into_par_iter()
            .map(|i| {
                let table = &self.tail_table[i * m..(i + 1) * m];
                let near: T = table.iter().zip(&shapes).map(|(&k, &w)| k * w).sum();
                prefactor * (near + s_full * far)
            })
            .collect())
    }

    /// Applies the operator to a field on the same grid, including its tail.
    /// The result carries no tail model; callers assign one.
    pub fn apply(&self, f: &RadialField<T>) -> Result<RadialField<T>> {
        if f.grid().spec() != self.grid.spec() {
            return Err(Error::Validation("field and operator live on different grids".into()));
        }
        let values = f.values();
        let count = self.len();
        let mut out: Vec<T> = self
            .matrix
            .par_chunks(count)
            .map(|row| row.iter().zip(values).map(|(&a, &x)| a * x).sum())
            .collect();
        if let Some(tail) = f.tail() {
            let last = *values.last().unwrap();
            if last != T::zero() {
                let extra = self.tail_contribution(last, tail)?;
                for (o, e) in out.iter_mut().zip(extra) {
                    *o = *o + e;
                }
            }
        }
        RadialField::new(self.grid.clone(), out, None)
    }
}
