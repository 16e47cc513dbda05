//! Dense complex linear algebra helpers on top of ndarray-linalg.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use ndarray_linalg::{Eig, Factorize, Inverse, LUFactorized, ReciprocalConditionNum, Solve};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Condition floor below which a dense solve is refused.
pub const RCOND_FLOOR: f64 = 1e-14;
/// Relative residual required from every linear solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

pub fn norm(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(m: ArrayView2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dotc(a: ArrayView1<C64>, b: ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn is_finite(v: ArrayView1<C64>) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn backend(context: &'static str, e: impl std::fmt::Display) -> Error {
    Error::Backend {
        context,
        detail: e.to_string(),
    }
}

/// LU factorization with condition estimate, reusable across right-hand sides.
pub struct DenseSolver {
    a: CMat,
    lu: LUFactorized<ndarray::OwnedRepr<C64>>,
    rcond: f64,
    context: String,
}

impl DenseSolver {
    pub fn new(a: &CMat, context: impl Into<String>) -> Result<Self> {
        let context = context.into();
        if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite(context));
        }
        let lu = a.factorize().map_err(|e| backend("lu factorize", e))?;
        let rcond = lu.rcond().map_err(|e| backend("rcond", e))?;
        if !(rcond > RCOND_FLOOR) {
            return Err(Error::Conditioning { context, rcond });
        }
        Ok(Self {
            a: a.clone(),
            lu,
            rcond,
            context,
        })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// Solves `A x = b` with up to three rounds of iterative refinement.
    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        let bn = norm(b.view());
        let mut x = self.lu.solve(b).map_err(|e| backend("lu solve", e))?;
        if bn == 0.0 {
            return Ok(x);
        }
        let mut res = norm((b - &self.a.dot(&x)).view()) / bn;
        for _ in 0..3 {
            if res <= 1e-14 {
                break;
            }
            let r = b - &self.a.dot(&x);
            let dx = self.lu.solve(&r).map_err(|e| backend("lu solve", e))?;
            let trial = &x + &dx;
            let trial_res = norm((b - &self.a.dot(&trial)).view()) / bn;
            if trial_res >= res {
                break;
            }
            x = trial;
            res = trial_res;
        }
        if !is_finite(x.view()) {
            return Err(Error::NonFinite(self.context.clone()));
        }
        if res > SOLVE_TOLERANCE {
            return Err(Error::Accuracy {
                context: self.context.clone(),
                achieved: res,
                required: SOLVE_TOLERANCE,
            });
        }
        Ok(x)
    }
}

pub fn solve(a: &CMat, b: &CVec, context: &str) -> Result<CVec> {
    DenseSolver::new(a, context)?.solve(b)
}

pub fn inverse(a: &CMat, context: &'static str) -> Result<CMat> {
    let lu = a.factorize().map_err(|e| backend(context, e))?;
    let rcond = lu.rcond().map_err(|e| backend(context, e))?;
    if !(rcond > RCOND_FLOOR) {
        return Err(Error::Conditioning {
            context: context.to_string(),
            rcond,
        });
    }
    a.inv().map_err(|e| backend(context, e))
}

/// Eigen-decomposition `A = V diag(λ) V⁻¹` of a general complex matrix.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub values: CVec,
    pub vectors: CMat,
    pub inverse: CMat,
}

impl EigenBasis {
    pub fn new(a: &CMat) -> Result<Self> {
        let (values, vectors) = a.eig().map_err(|e| backend("eig", e))?;
        let inverse = vectors
            .inv()
            .map_err(|e| backend("eigenvector inverse", e))?;
        Ok(Self {
            values,
            vectors,
            inverse,
        })
    }

    /// Applies `Y = V [(V⁻¹ X V⁻ᵀ) ⊘ (λ_a + λ_b)] Vᵀ`, the inverse of
    /// `X ↦ A X + X Aᵀ`.
    pub fn apply_sylvester_inverse(&self, x: &CMat) -> CMat {
        let mut t = self.inverse.dot(x).dot(&self.inverse.t());
        let n = self.values.len();
        for a in 0..n {
            for b in 0..n {
                t[[a, b]] /= self.values[a] + self.values[b];
            }
        }
        self.vectors.dot(&t).dot(&self.vectors.t())
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::eye(n)
}

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension {
            context: "expm",
            expected: n,
            got: a.ncols(),
        });
    }
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("expm argument".into()));
    }
    let nrm = one_norm(a);
    let squarings = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = C64::from(0.5f64.powi(squarings));
    let a = a.mapv(|z| z * scale);
    let b = &PADE13;
    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let c = |x: f64| C64::from(x);

    let u_inner = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let u_tail = &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + &id * c(b[1]);
    let u = a.dot(&(a6.dot(&u_inner) + u_tail));
    let v_inner = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let v = a6.dot(&v_inner) + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + &id * c(b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let lu = q.factorize().map_err(|e| backend("expm", e))?;
    let mut r = CMat::zeros((n, n));
    for j in 0..n {
        let col = lu
            .solve(&p.column(j).to_owned())
            .map_err(|e| backend("expm", e))?;
        r.column_mut(j).assign(&col);
    }
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Summary of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct GmresReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            restart: 60,
            max_iterations: 2000,
        }
    }
}

/// Right-preconditioned restarted GMRES for `A x = b`.
pub fn gmres<A, M>(
    op: A,
    prec: M,
    b: &CVec,
    opts: GmresOptions,
    context: &str,
) -> Result<(CVec, GmresReport)>
where
    A: Fn(&CVec) -> CVec,
    M: Fn(&CVec) -> CVec,
{
    let n = b.len();
    let bn = norm(b.view());
    let mut x = CVec::zeros(n);
    if bn == 0.0 {
        return Ok((
            x,
            GmresReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let m = opts.restart.max(1);
    let mut total = 0usize;
    while total < opts.max_iterations {
        let r = b - &op(&x);
        let beta = norm(r.view());
        if beta / bn <= opts.tolerance {
            break;
        }
        let mut basis: Vec<CVec> = vec![r.mapv(|z| z / beta)];
        let mut h = Array2::<C64>::zeros((m + 1, m));
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::from(beta);
        let mut k = 0;
        while k < m && total < opts.max_iterations {
            let z = prec(&basis[k]);
            let mut w = op(&z);
            // Two passes of modified Gram-Schmidt.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dotc(v.view(), w.view());
                    h[[i, k]] += hij;
                    Zip::from(&mut w).and(v).for_each(|wi, &vi| *wi -= hij * vi);
                }
            }
            let hn = norm(w.view());
            h[[k + 1, k]] = C64::from(hn);
            for i in 0..k {
                let (x0, x1) = (h[[i, k]], h[[i + 1, k]]);
                h[[i, k]] = x0 * cs[i] + sn[i] * x1;
                h[[i + 1, k]] = -sn[i].conj() * x0 + x1 * cs[i];
            }
            let (a, bb) = (h[[k, k]], h[[k + 1, k]]);
            let rr = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = ONE;
            } else {
                cs[k] = a.norm() / rr;
                sn[k] = (a / a.norm()) * bb.conj() / rr;
            }
            h[[k, k]] = a * cs[k] + sn[k] * bb;
            h[[k + 1, k]] = ZERO;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            let est = g[k].norm() / bn;
            if est <= 0.5 * opts.tolerance || hn == 0.0 {
                break;
            }
            basis.push(w.mapv(|z| z / hn));
        }
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[[i, j]] * y[j];
            }
            y[i] = acc / h[[i, i]];
        }
        let mut update = CVec::zeros(n);
        for (v, yi) in basis.iter().zip(&y) {
            Zip::from(&mut update)
                .and(v)
                .for_each(|u, &vi| *u += yi * vi);
        }
        x += &prec(&update);
    }
    let rel_true = norm((b - &op(&x)).view()) / bn;
    if !is_finite(x.view()) {
        return Err(Error::NonFinite(context.to_string()));
    }
    if rel_true > opts.tolerance.max(SOLVE_TOLERANCE) {
        return Err(Error::Accuracy {
            context: context.to_string(),
            achieved: rel_true,
            required: opts.tolerance.max(SOLVE_TOLERANCE),
        });
    }
    Ok((
        x,
        GmresReport {
            iterations: total,
            relative_residual: rel_true,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_matrix(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_shape_fn((n, n), |_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn expm_of_diagonal_matches_scalar_exponentials() {
        let d = [
            C64::new(-0.5, 3.0),
            C64::new(2.0, -40.0),
            C64::new(0.0, 0.1),
        ];
        let mut a = CMat::zeros((3, 3));
        for (i, v) in d.iter().enumerate() {
            a[[i, i]] = *v;
        }
        let e = expm(&a).unwrap();
        for (i, v) in d.iter().enumerate() {
            assert_relative_eq!(
                e[[i, i]].re,
                v.exp().re,
                max_relative = 1e-12,
                epsilon = 1e-13
            );
            assert_relative_eq!(
                e[[i, i]].im,
                v.exp().im,
                max_relative = 1e-12,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn expm_semigroup_property() {
        let a = random_matrix(12, 7).mapv(|z| z * 3.0);
        let full = expm(&a).unwrap();
        let half = expm(&a.mapv(|z| z * 0.5)).unwrap();
        let diff = frobenius((&full - &half.dot(&half)).view()) / frobenius(full.view());
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn expm_nilpotent_is_exact_polynomial() {
        let mut a = CMat::zeros((3, 3));
        a[[0, 1]] = C64::new(2.0, 1.0);
        a[[1, 2]] = C64::new(-1.0, 0.5);
        let e = expm(&a).unwrap();
        let expected = identity(3) + &a + a.dot(&a).mapv(|z| z * 0.5);
        assert!(frobenius((&e - &expected).view()) < 1e-14);
    }

    #[test]
    fn dense_solver_refines_to_tolerance() {
        let a = random_matrix(40, 3) + identity(40).mapv(|z| z * 4.0);
        let b = CVec::from_iter((0..40).map(|k| C64::new(k as f64, 1.0)));
        let x = solve(&a, &b, "test").unwrap();
        assert!(norm((&b - &a.dot(&x)).view()) / norm(b.view()) < 1e-13);
    }

    #[test]
    fn singular_matrix_reports_conditioning() {
        let mut a = CMat::zeros((3, 3));
        a[[0, 0]] = ONE;
        a[[1, 1]] = ONE;
        let err = solve(&a, &CVec::from_elem(3, ONE), "singular").unwrap_err();
        assert!(matches!(
            err,
            Error::Conditioning { .. } | Error::Backend { .. }
        ));
    }

    #[test]
    fn gmres_matches_direct_solution() {
        let a = random_matrix(60, 11) + identity(60).mapv(|z| z * 8.0);
        let b = CVec::from_iter((0..60).map(|k| C64::new((k as f64).sin(), 0.3)));
        let direct = solve(&a, &b, "direct").unwrap();
        let opts = GmresOptions {
            tolerance: 1e-13,
            restart: 15,
            max_iterations: 1000,
        };
        let (x, rep) = gmres(|v| a.dot(v), |v| v.clone(), &b, opts, "gmres").unwrap();
        assert!(rep.relative_residual <= 1e-13);
        assert!(norm((&x - &direct).view()) / norm(direct.view()) < 1e-11);
    }

    #[test]
    fn sylvester_inverse_solves_symmetric_sum() {
        let a = random_matrix(6, 5) + identity(6).mapv(|z| z * C64::new(0.0, -3.0));
        let eb = EigenBasis::new(&a).unwrap();
        let x = random_matrix(6, 9);
        let y = eb.apply_sylvester_inverse(&x);
        let back = a.dot(&y) + y.dot(&a.t());
        assert!(frobenius((&back - &x).view()) < 1e-10 * frobenius(x.view()));
    }
}
