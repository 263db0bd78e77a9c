//! Dense complex linear-algebra kernels with explicit spectral contracts.
//!
//! Every closed form downstream (dual-SINR eigenbeamforming, log-det mutual
//! information, correlated channel shaping) reduces to the handful of
//! primitives here. They are thin, contract-checked layers over nalgebra's
//! Hermitian factorizations; the generalized eigensolver uses the Cholesky
//! reduction B = L L^H, which is unconditionally stable for the
//! well-conditioned B = gamma*I + rho*projector matrices arising in this
//! problem.

use nalgebra::{DMatrix, DVector};

use crate::{CMat, CVec, Error, Result, C64};

/// Elementwise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A square complex matrix equal to its own conjugate transpose.
///
/// Construction validates the symmetry to [`HERMITIAN_TOL`] elementwise and
/// then symmetrizes exactly, so downstream factorizations never see stray
/// asymmetry from accumulated rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMat,
}

impl HermitianMatrix {
    /// Validate and wrap a Hermitian matrix.
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows().max(1),
                got: entries.ncols(),
                context: "Hermitian matrix must be square and non-empty",
            });
        }
        let adj = entries.adjoint();
        let max_dev = (&entries - &adj)
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        if max_dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                max_dev,
                tol: HERMITIAN_TOL,
            });
        }
        let sym = (&entries + adj).map(|z| 0.5 * z);
        Ok(Self { entries: sym })
    }

    /// Build from an arbitrary square matrix by projecting onto the
    /// Hermitian part (M + M^H)/2. Used internally where the result is
    /// Hermitian by construction up to rounding.
    pub fn from_hermitian_part(m: &CMat) -> Self {
        let sym = (m + m.adjoint()).map(|z| 0.5 * z);
        Self { entries: sym }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    /// Real eigenvalues in ascending order together with the unitary
    /// eigenvector matrix (columns).
    pub fn eigen(&self) -> (Vec<f64>, CMat) {
        let eig = self.entries.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        (values, vectors)
    }

    pub fn trace_re(&self) -> f64 {
        self.entries.trace().re
    }
}

/// A channel vector together with a basis of its orthogonal subspace,
/// scaled so that `h h^H + U U^H = ||h||^2 I`.
///
/// For K = 2 the complement is the single rotated vector of the same norm;
/// for K > 2 it is the K x (K-1) matrix `||h|| * U0` where `U0` has
/// orthonormal columns spanning the null space of `h^H`.
#[derive(Debug, Clone)]
pub struct OrthogonalComplement {
    source: CVec,
    complement: CMat,
}

impl OrthogonalComplement {
    pub fn source(&self) -> &CVec {
        &self.source
    }

    pub fn complement(&self) -> &CMat {
        &self.complement
    }

    /// The rank-(K-1) outer product `U U^H = ||h||^2 (I - h h^H / ||h||^2)`.
    pub fn outer(&self) -> CMat {
        &self.complement * self.complement.adjoint()
    }
}

/// Orthogonal complement of a nonzero complex vector.
///
/// Built from the Householder reflector taking `h/||h||` to a unit axis:
/// the remaining reflector columns form an orthonormal basis of the
/// complement, which is then scaled by `||h||` so the reconstruction
/// identity holds exactly.
pub fn orth_complement(h: &CVec) -> Result<OrthogonalComplement> {
    let norm = h.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let k = h.len();
    if k < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: k,
            context: "orthogonal complement needs dimension >= 2",
        });
    }
    let x = h.map(|z| z / C64::from(norm));
    // Reflector u = x - alpha e1 with alpha = -exp(i arg(x1)) avoids
    // cancellation; when x is already along e1 the complement is the
    // trailing identity columns.
    let phase = if x[0].norm() > 0.0 {
        x[0] / C64::from(x[0].norm())
    } else {
        C64::from(1.0)
    };
    let alpha = -phase;
    let mut u = x.clone();
    u[0] -= alpha;
    let un2 = u.norm_squared();
    let mut basis = CMat::zeros(k, k - 1);
    if un2 < 1e-30 {
        for c in 0..k - 1 {
            basis[(c + 1, c)] = C64::from(1.0);
        }
    } else {
        // Columns 2..K of the reflector P = I - 2 u u^H / ||u||^2.
        let scale = C64::from(2.0 / un2);
        for c in 0..k - 1 {
            let e = c + 1;
            for r in 0..k {
                let id = if r == e {
                    C64::from(1.0)
                } else {
                    C64::from(0.0)
                };
                basis[(r, c)] = id - scale * u[r] * u[e].conj();
            }
        }
    }
    let complement = basis.map(|z| z * C64::from(norm));
    Ok(OrthogonalComplement {
        source: h.clone(),
        complement,
    })
}

/// Which end of the generalized spectrum to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

/// Result of a generalized eigensolve: the unit-norm extremal vector, its
/// Rayleigh quotient, and whether the extreme eigenvalue was nearly
/// degenerate (gap below 1e-10 relative), in which case any member of the
/// eigenspace is returned.
#[derive(Debug, Clone)]
pub struct GenEig {
    pub vector: CVec,
    pub value: f64,
    pub degenerate: bool,
}

/// Relative eigenvalue floor below which B is rejected as not positive
/// definite.
const PD_REL_TOL: f64 = 1e-12;
/// Relative spectral gap below which the extremal eigenpair is flagged
/// degenerate.
const DEGENERACY_REL_TOL: f64 = 1e-10;

/// Extremal generalized eigenvector of the Hermitian pair (A, B).
///
/// Maximizes (`which == Max`) or minimizes the quotient
/// `(v^H A v) / (v^H B v)` over unit-norm v, via the reduction
/// `B = L L^H`, a standard Hermitian solve on `L^-1 A L^-H`, and the back
/// substitution `v = L^-H y`. The returned vector has unit norm and a
/// deterministic phase: its first entry of non-negligible modulus is made
/// real positive.
pub fn generalized_eig_extreme(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    which: Extreme,
) -> Result<GenEig> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
            context: "generalized eigenproblem pair",
        });
    }
    let (b_eigs, _) = b.eigen();
    let b_max = b_eigs.last().copied().unwrap_or(0.0);
    if !(b_max > 0.0) || b_eigs[0] <= PD_REL_TOL * b_max {
        return Err(Error::NotPositiveDefinite {
            context: "denominator of generalized eigenproblem",
        });
    }
    let chol = b
        .entries()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            context: "Cholesky factorization of denominator",
        })?;
    let l = chol.l();
    // C = L^-1 A L^-H, solved column-block wise via triangular solves.
    let mut c = a.entries().clone();
    l.solve_lower_triangular_mut(&mut c);
    let mut ct = c.adjoint();
    l.solve_lower_triangular_mut(&mut ct);
    let c = HermitianMatrix::from_hermitian_part(&ct.adjoint());
    let (values, vectors) = c.eigen();
    let n = c.dim();
    let (idx, neighbor) = match which {
        Extreme::Max => (n - 1, n.saturating_sub(2)),
        Extreme::Min => (0, 1.min(n - 1)),
    };
    let value = values[idx];
    let degenerate = if n > 1 {
        (value - values[neighbor]).abs() <= DEGENERACY_REL_TOL * value.abs().max(f64::MIN_POSITIVE)
    } else {
        false
    };
    let y: CVec = vectors.column(idx).into_owned();
    let mut v = y;
    l.adjoint().solve_upper_triangular_mut(&mut v);
    let vnorm = v.norm();
    let mut v = v.map(|z| z / C64::from(vnorm));
    fix_phase(&mut v);
    Ok(GenEig {
        vector: v,
        value,
        degenerate,
    })
}

/// Rotate a vector so its first entry of non-negligible modulus is real
/// positive. Leaves the zero vector untouched.
pub fn fix_phase(v: &mut CVec) {
    let max_mod = v.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if max_mod == 0.0 {
        return;
    }
    let lead = v.iter().find(|z| z.norm() > 1e-12 * max_mod);
    if let Some(&z) = lead {
        let phase = z.conj() / C64::from(z.norm());
        for e in v.iter_mut() {
            *e *= phase;
        }
    }
}

/// Rayleigh quotient (v^H A v)/(v^H B v), real parts (both forms are real
/// for Hermitian A, B).
pub fn rayleigh_quotient(a: &HermitianMatrix, b: &HermitianMatrix, v: &CVec) -> f64 {
    let num = quadratic_form(a.entries(), v);
    let den = quadratic_form(b.entries(), v);
    num / den
}

/// v^H M v for Hermitian M (real part).
pub fn quadratic_form(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// Principal (Hermitian PSD) square root S of a PSD matrix, S S^H = R.
///
/// Eigenvalues below `-1e-10 * trace` are rejected; tiny negatives above
/// that threshold are clamped to zero.
pub fn hermitian_sqrt(r: &HermitianMatrix) -> Result<CMat> {
    let (values, vectors) = r.eigen();
    let floor = -1e-10 * r.trace_re().abs().max(f64::MIN_POSITIVE);
    let mut sqrt_vals = DVector::<C64>::zeros(r.dim());
    for (i, &lam) in values.iter().enumerate() {
        if lam < floor {
            return Err(Error::NegativeEigenvalue { value: lam });
        }
        sqrt_vals[i] = C64::from(lam.max(0.0).sqrt());
    }
    let s = &vectors * DMatrix::from_diagonal(&sqrt_vals) * vectors.adjoint();
    Ok(HermitianMatrix::from_hermitian_part(&s).into_entries())
}

/// Natural-log determinant of a Hermitian positive definite matrix,
/// computed from the Cholesky factor rather than a raw determinant.
///
/// Pivots must be genuinely positive real; a complex-sqrt pivot (which the
/// factorization produces silently on indefinite input) is rejected.
pub fn logdet_hpd(m: &HermitianMatrix) -> Result<f64> {
    let chol = m
        .entries()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            context: "log-det requires positive definiteness",
        })?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..m.dim() {
        let d = l[(i, i)];
        if !(d.re > 0.0) || d.im.abs() > 1e-8 * d.re {
            return Err(Error::NotPositiveDefinite {
                context: "non-positive Cholesky pivot",
            });
        }
        acc += d.re.ln();
    }
    Ok(2.0 * acc)
}

/// det(I + rho*M) for a 2x2 Hermitian M via the characteristic-polynomial
/// identity `1 + rho*Tr(M) + rho^2*det(M)`.
pub fn char_poly_det2(m: &HermitianMatrix, rho: f64) -> Result<f64> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: m.dim(),
            context: "characteristic-polynomial identity is for 2x2",
        });
    }
    let e = m.entries();
    let tr = (e[(0, 0)] + e[(1, 1)]).re;
    let det = (e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)]).re;
    Ok(1.0 + rho * tr + rho * rho * det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_fn(n, |_, _| {
            cx(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        let m = CMat::from_fn(n, n, |_, _| {
            cx(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        HermitianMatrix::from_hermitian_part(&m)
    }

    fn random_hpd(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        let m = CMat::from_fn(n, n, |_, _| {
            cx(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mm = &m * m.adjoint() + CMat::identity(n, n).map(|z| z * C64::from(0.5));
        HermitianMatrix::from_hermitian_part(&mm)
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0), cx(2.0, 0.0)],
        );
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn orth_complement_axis_aligned() {
        // h = (1, 0): complement spans (0, 1) with norm 1.
        let h = CVec::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]);
        let oc = orth_complement(&h).unwrap();
        let u = oc.complement();
        assert_eq!(u.ncols(), 1);
        assert!(u[(0, 0)].norm() < 1e-14);
        assert!((u[(1, 0)].norm() - 1.0).abs() < 1e-14);

        // h = (0, c): complement spans (1, 0) with norm |c|.
        let c = cx(0.3, -1.2);
        let h = CVec::from_vec(vec![cx(0.0, 0.0), c]);
        let oc = orth_complement(&h).unwrap();
        let u = oc.complement();
        assert!(u[(1, 0)].norm() < 1e-14);
        assert!((u[(0, 0)].norm() - c.norm()).abs() < 1e-12);
    }

    #[test]
    fn orth_complement_zero_vector_errors() {
        let h = CVec::zeros(3);
        assert!(matches!(orth_complement(&h), Err(Error::ZeroVector)));
    }

    #[test]
    fn orth_complement_reconstruction_identity() {
        // h h^H + U U^H = ||h||^2 I and h^H U = 0, randomized over K = 2..4.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 2..=4 {
            for _ in 0..1000 {
                let h = random_cvec(&mut rng, k);
                let oc = orth_complement(&h).unwrap();
                let u = oc.complement();
                assert_eq!(u.ncols(), k - 1);
                let cross = h.adjoint() * u;
                let rel_orth = cross.norm() / (h.norm() * u.norm());
                assert!(rel_orth < 1e-10, "orthogonality {rel_orth:e} at K={k}");
                let lhs = &h * h.adjoint() + oc.outer();
                let rhs = CMat::identity(k, k).map(|z| z * C64::from(h.norm_squared()));
                let rel = (lhs - &rhs).norm() / rhs.norm();
                assert!(rel < 1e-10, "reconstruction error {rel:e} at K={k}");
            }
        }
    }

    #[test]
    fn gen_eig_identity_pair_ties_to_canonical_basis_vector() {
        let id = HermitianMatrix::new(CMat::identity(3, 3)).unwrap();
        let out = generalized_eig_extreme(&id, &id, Extreme::Max).unwrap();
        assert!(out.degenerate);
        assert!((out.value - 1.0).abs() < 1e-12);
        // Exactly one entry 1, rest 0.
        let ones = out
            .vector
            .iter()
            .filter(|z| (z.norm() - 1.0).abs() < 1e-12)
            .count();
        let zeros = out.vector.iter().filter(|z| z.norm() < 1e-12).count();
        assert_eq!(ones, 1);
        assert_eq!(zeros, 2);
    }

    #[test]
    fn gen_eig_diagonal_case() {
        let a = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            cx(2.0, 0.0),
            cx(1.0, 0.0),
        ])))
        .unwrap();
        let b = HermitianMatrix::new(CMat::identity(2, 2)).unwrap();
        let out = generalized_eig_extreme(&a, &b, Extreme::Max).unwrap();
        assert!((out.value - 2.0).abs() < 1e-12);
        assert!((out.vector[0] - cx(1.0, 0.0)).norm() < 1e-10);
        assert!(out.vector[1].norm() < 1e-10);

        let out = generalized_eig_extreme(&a, &b, Extreme::Min).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!((out.vector[1] - cx(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn gen_eig_beats_random_sampling() {
        // Random-sampling oracle: the returned vector's quotient dominates
        // 10,000 random unit vectors up to 1e-9 relative slack.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let a = random_hermitian(&mut rng, 3);
            let b = random_hpd(&mut rng, 3);
            let out = generalized_eig_extreme(&a, &b, Extreme::Max).unwrap();
            let q_star = rayleigh_quotient(&a, &b, &out.vector);
            assert!((q_star - out.value).abs() <= 1e-9 * out.value.abs().max(1.0));
            for _ in 0..10_000 {
                let v = random_cvec(&mut rng, 3).normalize();
                let q = rayleigh_quotient(&a, &b, &v);
                assert!(q <= q_star + 1e-9 * q_star.abs());
            }
        }
    }

    #[test]
    fn gen_eig_scale_invariant_direction() {
        // Scaling A and B by the same positive constant leaves the argmax
        // unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_hermitian(&mut rng, 4);
        let b = random_hpd(&mut rng, 4);
        let out1 = generalized_eig_extreme(&a, &b, Extreme::Max).unwrap();
        let scale = |h: &HermitianMatrix, c: f64| {
            HermitianMatrix::new(h.entries().map(|z| z * C64::from(c))).unwrap()
        };
        let out2 =
            generalized_eig_extreme(&scale(&a, 7.25), &scale(&b, 7.25), Extreme::Max).unwrap();
        assert!((out1.vector - out2.vector).norm() < 1e-8);
    }

    #[test]
    fn gen_eig_rejects_indefinite_denominator() {
        let a = HermitianMatrix::new(CMat::identity(2, 2)).unwrap();
        let b = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            cx(1.0, 0.0),
            cx(-1.0, 0.0),
        ])))
        .unwrap();
        assert!(matches!(
            generalized_eig_extreme(&a, &b, Extreme::Max),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let id = HermitianMatrix::new(CMat::identity(3, 3)).unwrap();
        let s = hermitian_sqrt(&id).unwrap();
        assert!((s - CMat::identity(3, 3)).norm() < 1e-12);

        let r = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            cx(4.0, 0.0),
            cx(9.0, 0.0),
        ])))
        .unwrap();
        let s = hermitian_sqrt(&r).unwrap();
        assert!((s[(0, 0)] - cx(2.0, 0.0)).norm() < 1e-12);
        assert!((s[(1, 1)] - cx(3.0, 0.0)).norm() < 1e-12);
        assert!(s[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn sqrt_reconstructs_random_correlation() {
        // Toeplitz correlation with tau = 0.5, K = 3: S S^H = R.
        let tau: f64 = 0.5;
        let r = CMat::from_fn(3, 3, |i, j| cx(tau.powi((i as i32 - j as i32).abs()), 0.0));
        let r = HermitianMatrix::new(r).unwrap();
        let s = hermitian_sqrt(&r).unwrap();
        let rel = (&s * s.adjoint() - r.entries()).norm() / r.entries().norm();
        assert!(rel < 1e-10);
    }

    #[test]
    fn sqrt_idempotent_under_squaring() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s0 = hermitian_sqrt(&random_hpd(&mut rng, 4)).unwrap();
            let prod = HermitianMatrix::from_hermitian_part(&(&s0 * s0.adjoint()));
            let s1 = hermitian_sqrt(&prod).unwrap();
            let rel = (&s1 - &s0).norm() / s0.norm();
            assert!(rel < 1e-9, "sqrt not idempotent, rel err {rel:e}");
        }
    }

    #[test]
    fn sqrt_rejects_negative_eigenvalue() {
        let r = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            cx(1.0, 0.0),
            cx(-0.5, 0.0),
        ])))
        .unwrap();
        assert!(matches!(
            hermitian_sqrt(&r),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn logdet_identity_diagonal_and_rank_one() {
        let id = HermitianMatrix::new(CMat::identity(4, 4)).unwrap();
        assert!(logdet_hpd(&id).unwrap().abs() < 1e-12);

        let d = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            cx(1.0_f64.exp(), 0.0),
            cx(2.0_f64.exp(), 0.0),
        ])))
        .unwrap();
        assert!((logdet_hpd(&d).unwrap() - 3.0).abs() < 1e-12);

        // Rank-one determinant lemma: log det(I + rho h h^H) = log(1 + rho ||h||^2).
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let h = random_cvec(&mut rng, 3);
            let rho = 100.0;
            let m = CMat::identity(3, 3) + (&h * h.adjoint()).map(|z| z * C64::from(rho));
            let m = HermitianMatrix::from_hermitian_part(&m);
            let expect = (1.0 + rho * h.norm_squared()).ln();
            let got = logdet_hpd(&m).unwrap();
            assert!((got - expect).abs() < 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn logdet_multiplicative_on_commuting_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = 3;
            let da = CVec::from_fn(n, |_, _| cx(rng.random::<f64>() + 0.1, 0.0));
            let db = CVec::from_fn(n, |_, _| cx(rng.random::<f64>() + 0.1, 0.0));
            let a = HermitianMatrix::new(CMat::from_diagonal(&da)).unwrap();
            let b = HermitianMatrix::new(CMat::from_diagonal(&db)).unwrap();
            let ab = HermitianMatrix::new(a.entries() * b.entries()).unwrap();
            let lhs = logdet_hpd(&ab).unwrap();
            let rhs = logdet_hpd(&a).unwrap() + logdet_hpd(&b).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            cx(1.0, 0.0),
            cx(-2.0, 0.0),
        ])))
        .unwrap();
        assert!(matches!(
            logdet_hpd(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn char_poly_zero_and_identity() {
        let z = HermitianMatrix::new(CMat::zeros(2, 2)).unwrap();
        assert!((char_poly_det2(&z, 3.7).unwrap() - 1.0).abs() < 1e-14);
        let id = HermitianMatrix::new(CMat::identity(2, 2)).unwrap();
        assert!((char_poly_det2(&id, 1.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn char_poly_matches_direct_determinant() {
        // Direct-determinant oracle at rho = 37.5.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let m = random_hermitian(&mut rng, 2);
            let rho = 37.5;
            let direct = (CMat::identity(2, 2) + m.entries().map(|z| z * C64::from(rho)))
                .determinant()
                .re;
            let got = char_poly_det2(&m, rho).unwrap();
            assert!((got - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn char_poly_rejects_wrong_dim() {
        let m = HermitianMatrix::new(CMat::identity(3, 3)).unwrap();
        assert!(matches!(
            char_poly_det2(&m, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
