//! Dense complex matrix kernel: Hermitian eigendecomposition, Takagi
//! factorization, unitary exponentials and validation helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RVec = DVector<f64>;

/// Default relative tolerance for structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_norm(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn check_square(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

/// Max-norm of `A - A†`.
pub fn hermitian_residual(a: &CMat) -> f64 {
    max_norm(&(a - a.adjoint()))
}

/// Max-norm of `A - Aᵀ`.
pub fn symmetric_residual(a: &CMat) -> f64 {
    max_norm(&(a - a.transpose()))
}

/// Max-norm of `U†U - 1`.
pub fn unitary_residual(u: &CMat) -> f64 {
    let n = u.ncols();
    max_norm(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn check_hermitian(a: &CMat, tol: f64) -> Result<()> {
    check_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let residual = hermitian_residual(a);
    if residual > tol * max_norm(a).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

pub fn check_symmetric(a: &CMat, tol: f64) -> Result<()> {
    check_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let residual = symmetric_residual(a);
    if residual > tol * max_norm(a).max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { residual });
    }
    Ok(())
}

pub fn check_unitary(u: &CMat, tol: f64) -> Result<()> {
    check_square(u)?;
    if !is_finite(u) {
        return Err(Error::NonFinite);
    }
    let residual = unitary_residual(u);
    if residual > tol {
        return Err(Error::NotUnitary { residual });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEig {
    pub eigvals: RVec,
    /// Columns are eigenvectors.
    pub vectors: CMat,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn reconstruct(&self) -> CMat {
        let d = CMat::from_diagonal(&self.eigvals.map(|g| c64(g, 0.0)));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(a: &CMat) -> Result<HermitianEig> {
    hermitian_eig_tol(a, DEFAULT_TOL)
}

/// Hermitian eigendecomposition. Eigenvalues are sorted ascending and each
/// cluster of (near-)degenerate eigenvectors is replaced by a canonical
/// orthonormal basis of the same eigenspace, so identical inputs always give
/// identical outputs irrespective of the backend's internal choices.
pub fn hermitian_eig_tol(a: &CMat, tol: f64) -> Result<HermitianEig> {
    check_hermitian(a, tol)?;
    let n = a.nrows();
    let herm = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let scale = max_norm(a).max(f64::MIN_POSITIVE);
    let gap = 1e-9 * scale;
    let mut out = CMat::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] < gap {
            end += 1;
        }
        let block = vecs.columns(start, end - start).into_owned();
        let canon = canonical_basis_of_span(&block);
        out.columns_mut(start, end - start).copy_from(&canon);
        start = end;
    }
    Ok(HermitianEig { eigvals: RVec::from_vec(vals), vectors: out })
}

/// Canonical orthonormal basis of the column span of `q` (orthonormal columns):
/// pivoted Gram-Schmidt on the projections of the canonical basis vectors.
/// Each returned vector has a real positive entry at its pivot index.
fn canonical_basis_of_span(q: &CMat) -> CMat {
    let n = q.nrows();
    let k = q.ncols();
    let proj = q * q.adjoint();
    let mut chosen: Vec<CVec> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let mut best: Option<(usize, CVec, f64)> = None;
        for m in 0..n {
            if used[m] {
                continue;
            }
            let mut v: CVec = proj.column(m).into_owned();
            for u in &chosen {
                let c = u.dotc(&v);
                v -= u * c;
            }
            for u in &chosen {
                let c = u.dotc(&v);
                v -= u * c;
            }
            let nv = v.norm();
            if best.as_ref().map_or(true, |b| nv > b.2 * (1.0 + 1e-12)) {
                best = Some((m, v, nv));
            }
        }
        let (m, v, nv) = best.expect("span dimension exceeds ambient dimension");
        used[m] = true;
        let mut v = v / c64(nv, 0.0);
        let ph = v[m];
        if ph.norm() > 0.0 {
            v *= ph.conj() / ph.norm();
        }
        chosen.push(v);
    }
    let mut out = CMat::zeros(n, k);
    for (j, v) in chosen.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Takagi factorization `f = V diag(r) Vᵀ` with `r` descending and `V` unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct TakagiFactorization {
    pub v: CMat,
    pub r: RVec,
}

impl TakagiFactorization {
    pub fn reconstruct(&self) -> CMat {
        let d = CMat::from_diagonal(&self.r.map(|x| c64(x, 0.0)));
        &self.v * d * self.v.transpose()
    }
}

pub fn takagi(f: &CMat) -> Result<TakagiFactorization> {
    takagi_tol(f, DEFAULT_TOL)
}

/// Takagi factorization through the real symmetric embedding
/// `H = [[Re f, Im f], [Im f, -Re f]]`: an eigenvector `(x; y)` of `H` with
/// eigenvalue `σ > 0` yields a Takagi vector `u = x + iy` with `f ū = σ u`.
pub fn takagi_tol(f: &CMat, tol: f64) -> Result<TakagiFactorization> {
    check_symmetric(f, tol)?;
    let n = f.nrows();
    let fs = (f + f.transpose()).scale(0.5);
    let scale = max_norm(&fs);
    if scale == 0.0 {
        return Ok(TakagiFactorization { v: CMat::identity(n, n), r: RVec::zeros(n) });
    }
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = fs[(i, j)];
            h[(i, j)] = z.re;
            h[(i, n + j)] = z.im;
            h[(n + i, j)] = z.im;
            h[(n + i, n + j)] = -z.re;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let cutoff = 1e-13 * scale * n as f64;
    let mut cols: Vec<CVec> = Vec::with_capacity(n);
    let mut sig: Vec<f64> = Vec::with_capacity(n);
    for &idx in order.iter().take(n) {
        let s = eig.eigenvalues[idx];
        if s <= cutoff {
            break;
        }
        let w = eig.eigenvectors.column(idx);
        let mut u = CVec::from_fn(n, |k, _| c64(w[k], w[n + k]));
        for prev in &cols {
            let c = prev.dotc(&u);
            u -= prev * c;
        }
        let nu = u.norm();
        if nu < 0.5 {
            break;
        }
        u /= c64(nu, 0.0);
        fix_sign(&mut u);
        cols.push(u);
        sig.push(s);
    }
    complete_basis(&mut cols, n);
    sig.resize(n, 0.0);
    let mut v = CMat::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        v.set_column(j, c);
    }
    Ok(TakagiFactorization { v, r: RVec::from_vec(sig) })
}

/// Takagi vectors are defined up to sign; pick the one whose largest entry
/// has positive real part (positive imaginary part if purely imaginary).
fn fix_sign(u: &mut CVec) {
    let mut pivot = 0;
    let mut best = -1.0;
    for (k, z) in u.iter().enumerate() {
        if z.norm() > best * (1.0 + 1e-9) {
            best = z.norm();
            pivot = k;
        }
    }
    let z = u[pivot];
    let flip = if z.re.abs() > 1e-12 * z.norm() { z.re < 0.0 } else { z.im < 0.0 };
    if flip {
        u.neg_mut();
    }
}

/// Extend orthonormal `cols` to a basis of C^n by Gram-Schmidt on the
/// canonical basis vectors.
pub fn complete_basis(cols: &mut Vec<CVec>, n: usize) {
    let mut m = 0;
    while cols.len() < n && m < n {
        let mut v = CVec::zeros(n);
        v[m] = c64(1.0, 0.0);
        for _ in 0..2 {
            for u in cols.iter() {
                let c = u.dotc(&v);
                v -= u * c;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            cols.push(v / c64(nv, 0.0));
        }
        m += 1;
    }
}

/// Unitary whose first columns are the given orthonormal vectors.
pub fn unitary_with_columns(first: &[CVec], n: usize) -> Result<CMat> {
    let mut cols: Vec<CVec> = Vec::with_capacity(n);
    for v in first {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        let mut u = v.clone();
        for prev in &cols {
            let c = prev.dotc(&u);
            u -= prev * c;
        }
        let nu = u.norm();
        if nu < 1e-9 {
            return Err(Error::Invalid("mode vectors are linearly dependent".into()));
        }
        cols.push(u / c64(nu, 0.0));
    }
    complete_basis(&mut cols, n);
    let mut out = CMat::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    Ok(out)
}

/// `exp(-i·scale·H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMat, scale: f64) -> Result<CMat> {
    if !scale.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = hermitian_eig(h)?;
    Ok(exp_from_eig(&eig, scale))
}

pub fn exp_from_eig(eig: &HermitianEig, scale: f64) -> CMat {
    let phases = eig.eigvals.map(|g| Complex64::from_polar(1.0, -scale * g));
    let d = CMat::from_diagonal(&phases);
    &eig.vectors * d * eig.vectors.adjoint()
}

/// Hermitian `K` with `exp(-iK) = U` for unitary `U`, eigenphases in `(-π, π]`.
pub fn unitary_log(u: &CMat) -> Result<CMat> {
    check_unitary(u, 1e-8)?;
    // U is normal: its Hermitian and anti-Hermitian parts commute and share
    // eigenvectors with U, so diagonalize a generic real combination.
    let hp = (u + u.adjoint()).scale(0.5);
    let ap = (u - u.adjoint()) * c64(0.0, -0.5);
    let mix = &hp + ap.scale(std::f64::consts::FRAC_1_SQRT_2 * 0.731);
    let eig = hermitian_eig(&mix)?;
    let w = &eig.vectors;
    let n = u.nrows();
    let mut theta = RVec::zeros(n);
    for k in 0..n {
        let col = w.column(k);
        let z = col.dotc(&(u * col));
        theta[k] = -z.arg();
    }
    let d = CMat::from_diagonal(&theta.map(|t| c64(t, 0.0)));
    let k = w * d * w.adjoint();
    let back = exp_from_eig(&HermitianEig { eigvals: theta, vectors: w.clone() }, 1.0);
    let res = max_norm(&(back - u));
    if res > 1e-8 {
        return Err(Error::Invalid(format!("unitary logarithm failed (residual {res:.3e})")));
    }
    Ok((&k + k.adjoint()).scale(0.5))
}

pub fn real_diag(v: &RVec) -> CMat {
    CMat::from_diagonal(&v.map(|x| c64(x, 0.0)))
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Hermitian matrix with independent standard normal entries (GUE-like).
pub fn random_hermitian<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    use rand_distr::{Distribution, StandardNormal};
    let mut a = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            a[(i, j)] = c64(re, im);
        }
    }
    (&a + a.adjoint()).scale(0.5)
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal removed.
pub fn random_unitary<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    use rand_distr::{Distribution, StandardNormal};
    let a = CMat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re, im)
    });
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..n {
                q[(i, k)] *= ph;
            }
        }
    }
    q
}
