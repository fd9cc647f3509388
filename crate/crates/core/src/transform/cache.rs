//! Cache of integer powers `F^1..F^L` and the kernels that combine them.
//!
//! Negative powers are never stored: `F^{−n} = (F^n)^H` is read transposed
//! from the same buffer. Real matrices (graph-derived GFTs) are stored as
//! real, halving memory and bandwidth.

use faer::{Mat, MatRef};

use crate::c64;
use crate::error::{Error, Result};
use crate::graph::{GftMatrix, KroneckerUnitary};
use crate::linalg::{self, CMat};

/// Default storage budget for cached powers (4 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

const TILE: usize = 32;

#[derive(Debug, Clone)]
enum Powers {
    Real(Vec<Mat<f64>>),
    Complex(Vec<CMat>),
}

/// Immutable powers `P_n = F^n` for `n = 1..=L`, tagged with the fingerprint of `F`.
#[derive(Debug, Clone)]
pub struct PowerCache {
    n: usize,
    l: usize,
    powers: Powers,
    fingerprint: u64,
}

/// Bytes needed to cache `l` powers of an `n × n` matrix.
pub fn cache_bytes(n: usize, l: usize, real: bool) -> Option<u64> {
    let elem: u64 = if real { 8 } else { 16 };
    (n as u64)
        .checked_mul(n as u64)?
        .checked_mul(l as u64)?
        .checked_mul(elem)
}

fn check_budget(n: usize, l: usize, real: bool, budget: u64) -> Result<()> {
    if l == 0 {
        return Err(Error::Parameter(
            "truncation order L must be at least 1".into(),
        ));
    }
    match cache_bytes(n, l, real) {
        Some(b) if b <= budget => Ok(()),
        b => Err(Error::Capacity(format!(
            "caching L={l} powers at N={n} needs {} bytes, budget is {budget} bytes",
            b.map_or_else(|| "more than 2^64".to_string(), |b| b.to_string())
        ))),
    }
}

/// Checks that a cache for `f` at order `l` fits into `budget` before any work is done.
pub fn ensure_cache_fits(n: usize, l: usize, real: bool, budget: u64) -> Result<()> {
    check_budget(n, l, real, budget)
}

pub fn build_power_cache(f: &GftMatrix, l: usize) -> Result<PowerCache> {
    build_power_cache_with_budget(f, l, DEFAULT_MEMORY_BUDGET)
}

/// Builds `P_1 = F`, `P_n = F · P_{n−1}`.
pub fn build_power_cache_with_budget(f: &GftMatrix, l: usize, budget: u64) -> Result<PowerCache> {
    let n = f.n();
    let par = linalg::parallelism();
    let powers = match f.real_matrix() {
        Some(r) => {
            check_budget(n, l, true, budget)?;
            let mut p = Vec::with_capacity(l);
            p.push(r);
            for k in 1..l {
                let next = linalg::mul_real(p[0].as_ref(), p[k - 1].as_ref(), par);
                p.push(next);
            }
            Powers::Real(p)
        }
        None => {
            check_budget(n, l, false, budget)?;
            let mut p = Vec::with_capacity(l);
            p.push(f.matrix().clone());
            for k in 1..l {
                let next = linalg::mul(p[0].as_ref(), p[k - 1].as_ref(), par);
                p.push(next);
            }
            Powers::Complex(p)
        }
    };
    Ok(PowerCache {
        n,
        l,
        powers,
        fingerprint: f.fingerprint(),
    })
}

impl PowerCache {
    /// Cache for `A ⊗ B` using `(A ⊗ B)^n = A^n ⊗ B^n`.
    pub fn from_kronecker(
        k: &KroneckerUnitary,
        f: &GftMatrix,
        l: usize,
        budget: u64,
    ) -> Result<Self> {
        let n = k.n();
        check_budget(n, l, false, budget)?;
        let par = linalg::parallelism();
        let mut pa = k.a.clone();
        let mut pb = k.b.clone();
        let mut powers = Vec::with_capacity(l);
        for step in 0..l {
            if step > 0 {
                pa = linalg::mul(k.a.as_ref(), pa.as_ref(), par);
                pb = linalg::mul(k.b.as_ref(), pb.as_ref(), par);
            }
            powers.push(linalg::kron(pa.as_ref(), pb.as_ref()));
        }
        let fingerprint = linalg::fingerprint(powers[0].as_ref());
        if fingerprint != f.fingerprint() {
            return Err(Error::StaleCache {
                cache: fingerprint,
                matrix: f.fingerprint(),
            });
        }
        Ok(Self {
            n,
            l,
            powers: Powers::Complex(powers),
            fingerprint,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_real(&self) -> bool {
        matches!(self.powers, Powers::Real(_))
    }

    pub fn bytes(&self) -> u64 {
        cache_bytes(self.n, self.l, self.is_real()).unwrap_or(u64::MAX)
    }

    /// Errors with [`Error::StaleCache`] unless the cache was built from `f`.
    pub fn verify(&self, f: &GftMatrix) -> Result<()> {
        if self.fingerprint == f.fingerprint() {
            Ok(())
        } else {
            Err(Error::StaleCache {
                cache: self.fingerprint,
                matrix: f.fingerprint(),
            })
        }
    }

    /// `F^n` for `0 ≤ n ≤ L` as a complex matrix.
    pub fn power(&self, n: usize) -> CMat {
        assert!(n <= self.l, "power {n} exceeds cache order {}", self.l);
        if n == 0 {
            return CMat::identity(self.n, self.n);
        }
        match &self.powers {
            Powers::Real(p) => linalg::to_complex(p[n - 1].as_ref()),
            Powers::Complex(p) => p[n - 1].clone(),
        }
    }

    /// `Σ_{n=−L}^{L} w_n F^n` for each weight set (`w[n + L]`), in one pass over the cache.
    ///
    /// Per entry, the terms for `±n` are summed first and accumulated in
    /// increasing `n`, so mirrored weight sets produce exact Hermitian transposes.
    pub fn combine(&self, sets: &[&[f64]]) -> Vec<CMat> {
        self.combine_order(self.l, sets)
    }

    /// [`combine`](Self::combine) using only the first `l ≤ L` cached powers; weights have `2l+1` entries.
    pub fn combine_order(&self, l: usize, sets: &[&[f64]]) -> Vec<CMat> {
        assert!(l >= 1 && l <= self.l, "order {l} outside 1..={}", self.l);
        for w in sets {
            assert_eq!(w.len(), 2 * l + 1, "weight set must have 2l+1 entries");
        }
        let mut out: Vec<CMat> = sets.iter().map(|_| CMat::zeros(self.n, self.n)).collect();
        match &self.powers {
            Powers::Real(p) => combine_tiles(&p[..l], sets, l, &mut out),
            Powers::Complex(p) => combine_tiles(&p[..l], sets, l, &mut out),
        }
        out
    }

    /// `Σ_{n=−L}^{L} w_n F^n X` for each weight set, without forming the operators.
    pub fn apply_combined(&self, x: MatRef<'_, c64>, sets: &[&[f64]]) -> Result<Vec<CMat>> {
        if x.nrows() != self.n {
            return Err(Error::Shape(format!(
                "signal has {} rows, cache dimension is {}",
                x.nrows(),
                self.n
            )));
        }
        let l = self.l;
        let mut out: Vec<CMat> = sets
            .iter()
            .map(|w| Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * w[l]))
            .collect();
        self.for_each_power_product(x, |k, fwd, adj| {
            for (o, w) in out.iter_mut().zip(sets) {
                let (a, b) = (w[l + k], w[l - k]);
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                for j in 0..o.ncols() {
                    let (oc, fc, ac) = (o.col_as_slice_mut(j), fwd.col(j), adj.col(j));
                    for i in 0..oc.len() {
                        oc[i] += fc[i] * a + ac[i] * b;
                    }
                }
            }
        });
        Ok(out)
    }

    /// All products `(F^k X, (F^k)^H X)` for `k = 1..=L`, in cache order.
    pub fn power_products(&self, x: MatRef<'_, c64>) -> Result<Vec<(CMat, CMat)>> {
        if x.nrows() != self.n {
            return Err(Error::Shape(format!(
                "signal has {} rows, cache dimension is {}",
                x.nrows(),
                self.n
            )));
        }
        let mut out = Vec::with_capacity(self.l);
        self.for_each_power_product(x, |_, fwd, adj| out.push((fwd.to_owned(), adj.to_owned())));
        Ok(out)
    }

    fn for_each_power_product(
        &self,
        x: MatRef<'_, c64>,
        mut visit: impl FnMut(usize, MatRef<'_, c64>, MatRef<'_, c64>),
    ) {
        let par = linalg::parallelism();
        match &self.powers {
            Powers::Real(p) => {
                let parts = RealParts::split(x);
                for (k, pk) in p.iter().enumerate() {
                    let (fwd, adj) = fused_products(pk, &parts.vecs);
                    visit(k + 1, parts.join(&fwd).as_ref(), parts.join(&adj).as_ref());
                }
            }
            Powers::Complex(p) => {
                for (k, pk) in p.iter().enumerate() {
                    let fwd = linalg::mul(pk.as_ref(), x, par);
                    let adj = linalg::mul(pk.adjoint(), x, par);
                    visit(k + 1, fwd.as_ref(), adj.as_ref());
                }
            }
        }
    }
}

/// Real and (nonzero) imaginary parts of each column of a complex block.
struct RealParts {
    n: usize,
    cols: usize,
    vecs: Vec<Vec<f64>>,
    /// `(re index, im index)` into `vecs` per column
    index: Vec<(usize, Option<usize>)>,
}

impl RealParts {
    fn split(x: MatRef<'_, c64>) -> Self {
        let mut vecs = Vec::new();
        let mut index = Vec::new();
        for j in 0..x.ncols() {
            let col = x.col(j);
            vecs.push(col.iter().map(|z| z.re).collect());
            let re = vecs.len() - 1;
            let im = if col.iter().any(|z| z.im != 0.0) {
                vecs.push(col.iter().map(|z| z.im).collect());
                Some(vecs.len() - 1)
            } else {
                None
            };
            index.push((re, im));
        }
        Self {
            n: x.nrows(),
            cols: x.ncols(),
            vecs,
            index,
        }
    }

    fn join(&self, parts: &[Vec<f64>]) -> CMat {
        Mat::from_fn(self.n, self.cols, |i, j| {
            let (re, im) = self.index[j];
            c64::new(parts[re][i], im.map_or(0.0, |k| parts[k][i]))
        })
    }
}

/// `(P v, Pᵀ v)` for every vector, reading each column of `P` once.
fn fused_products(p: &Mat<f64>, vecs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = p.nrows();
    let mut fwd = vec![vec![0.0; n]; vecs.len()];
    let mut adj = vec![vec![0.0; p.ncols()]; vecs.len()];
    for j in 0..p.ncols() {
        let col = p.col_as_slice(j);
        for ((v, f), a) in vecs.iter().zip(fwd.iter_mut()).zip(adj.iter_mut()) {
            let xj = v[j];
            let mut acc = [0.0; 8];
            let (cc, ct) = col.as_chunks::<8>();
            let (vc, vt) = v.as_chunks::<8>();
            let (fc, ft) = f.as_chunks_mut::<8>();
            for ((c, x), o) in cc.iter().zip(vc).zip(fc) {
                for t in 0..8 {
                    o[t] += c[t] * xj;
                    acc[t] += c[t] * x[t];
                }
            }
            let mut dot =
                ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
            for ((c, x), o) in ct.iter().zip(vt).zip(ft) {
                *o += c * xj;
                dot += c * x;
            }
            a[j] = dot;
        }
    }
    (fwd, adj)
}

trait Entry: Copy {
    fn scaled(self, c: f64) -> c64;
    fn conj_scaled(self, c: f64) -> c64;
}

impl Entry for f64 {
    #[inline(always)]
    fn scaled(self, c: f64) -> c64 {
        c64::new(self * c, 0.0)
    }
    #[inline(always)]
    fn conj_scaled(self, c: f64) -> c64 {
        c64::new(self * c, 0.0)
    }
}

impl Entry for c64 {
    #[inline(always)]
    fn scaled(self, c: f64) -> c64 {
        c64::new(self.re * c, self.im * c)
    }
    #[inline(always)]
    fn conj_scaled(self, c: f64) -> c64 {
        c64::new(self.re * c, -(self.im * c))
    }
}

/// Blocked evaluation of `q[i,j] = w_0 δ_ij + Σ_k (w_k p_k[i,j] + w_{−k} conj(p_k[j,i]))`.
fn combine_tiles<T: Entry>(powers: &[Mat<T>], sets: &[&[f64]], l: usize, out: &mut [CMat]) {
    let n = powers[0].nrows();
    let cols: Vec<Vec<&[T]>> = powers
        .iter()
        .map(|p| (0..n).map(|j| p.col_as_slice(j)).collect())
        .collect();
    for (q, w) in out.iter_mut().zip(sets) {
        for i in 0..n {
            q[(i, i)] = c64::new(w[l], 0.0);
        }
    }
    for bj in (0..n).step_by(TILE) {
        let je = (bj + TILE).min(n);
        for bi in (0..n).step_by(TILE) {
            let ie = (bi + TILE).min(n);
            for k in 1..=l {
                let pc = &cols[k - 1];
                for (q, w) in out.iter_mut().zip(sets) {
                    let (a, b) = (w[l + k], w[l - k]);
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    for j in bj..je {
                        let pj = pc[j];
                        let qc = q.col_as_slice_mut(j);
                        for i in bi..ie {
                            qc[i] += pj[i].scaled(a) + pc[i][j].conj_scaled(b);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_unitary, GftMatrix, Provenance};

    fn rotation(phi: f64) -> GftMatrix {
        let (s, c) = phi.sin_cos();
        let m = Mat::from_fn(2, 2, |i, j| {
            c64::new(
                match (i, j) {
                    (0, 0) | (1, 1) => c,
                    (0, 1) => -s,
                    _ => s,
                },
                0.0,
            )
        });
        GftMatrix::new(m, Provenance::Graph).unwrap()
    }

    #[test]
    fn identity_powers_are_identity() {
        let f = GftMatrix::new(CMat::identity(5, 5), Provenance::Graph).unwrap();
        let c = build_power_cache(&f, 3).unwrap();
        for k in 0..=3 {
            let d = &c.power(k) - &CMat::identity(5, 5);
            assert_eq!(linalg::frobenius(d.as_ref()), 0.0);
        }
        assert!(c.is_real());
    }

    #[test]
    fn rotation_fourth_power_is_minus_identity() {
        let f = rotation(std::f64::consts::FRAC_PI_4);
        let c = build_power_cache(&f, 4).unwrap();
        let d = &c.power(4) + &CMat::identity(2, 2);
        assert!(linalg::frobenius(d.as_ref()) < 1e-15);
    }

    #[test]
    fn recursion_preserves_unitarity() {
        let f = random_unitary(64, 9).unwrap();
        let c = build_power_cache(&f, 10).unwrap();
        assert!(linalg::unitarity_residual(c.power(10).as_ref()) <= 1e-8);
        assert_eq!(c.power(1), *f.matrix());
        for k in 2..=10 {
            let prod = linalg::mul(f.matrix().as_ref(), c.power(k - 1).as_ref(), faer::Par::Seq);
            let pk = c.power(k);
            let d = &pk - &prod;
            assert!(linalg::frobenius(d.as_ref()) <= 1e-9 * linalg::frobenius(pk.as_ref()));
        }
    }

    #[test]
    fn budget_and_order_checks() {
        let f = random_unitary(32, 1).unwrap();
        assert!(matches!(
            build_power_cache_with_budget(&f, 10, 32 * 32 * 16 * 9),
            Err(Error::Capacity(_))
        ));
        assert!(build_power_cache_with_budget(&f, 10, 32 * 32 * 16 * 10).is_ok());
        assert!(matches!(build_power_cache(&f, 0), Err(Error::Parameter(_))));
        assert!(cache_bytes(usize::MAX, 2, false).is_none());
    }

    #[test]
    fn stale_cache_is_detected() {
        let f = random_unitary(8, 1).unwrap();
        let g = random_unitary(8, 2).unwrap();
        let c = build_power_cache(&f, 2).unwrap();
        assert!(c.verify(&f).is_ok());
        assert!(matches!(c.verify(&g), Err(Error::StaleCache { .. })));
    }

    #[test]
    fn combine_matches_naive_sum() {
        let f = random_unitary(37, 4).unwrap();
        let l = 3;
        let c = build_power_cache(&f, l).unwrap();
        let w = [0.3, -0.2, 0.7, 1.1, 0.05, -0.4, 0.9];
        let fast = c.combine(&[&w]).pop().unwrap();
        let mut naive = CMat::identity(37, 37) * faer::Scale(c64::new(w[l], 0.0));
        for k in 1..=l {
            let p = c.power(k);
            naive = naive
                + &p * faer::Scale(c64::new(w[l + k], 0.0))
                + p.adjoint() * faer::Scale(c64::new(w[l - k], 0.0));
        }
        let d = &fast - &naive;
        assert!(linalg::frobenius(d.as_ref()) < 1e-13);

        let x = Mat::from_fn(37, 2, |i, j| c64::new(i as f64 * 0.1, j as f64 - 0.5));
        let applied = c.apply_combined(x.as_ref(), &[&w]).unwrap().pop().unwrap();
        let direct = &naive * &x;
        assert!(linalg::frobenius((&applied - &direct).as_ref()) < 1e-12);
    }

    #[test]
    fn mirrored_weights_give_exact_adjoint() {
        for f in [random_unitary(45, 2).unwrap(), rotation(0.4)] {
            let c = build_power_cache(&f, 4).unwrap();
            let w: Vec<f64> = (0..9).map(|i| (i as f64 * 1.7).sin()).collect();
            let mut m = w.clone();
            m.reverse();
            let out = c.combine(&[&w, &m]);
            let n = f.n();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(out[1][(j, i)], out[0][(i, j)].conj());
                }
            }
        }
    }

    #[test]
    fn kronecker_cache_matches_recursive_cache() {
        let k = KroneckerUnitary::random(3, 4, 5).unwrap();
        let f = k.to_gft().unwrap();
        let kc = PowerCache::from_kronecker(&k, &f, 5, DEFAULT_MEMORY_BUDGET).unwrap();
        let rc = build_power_cache(&f, 5).unwrap();
        assert_eq!(kc.fingerprint(), f.fingerprint());
        for p in 1..=5 {
            let d = &kc.power(p) - &rc.power(p);
            assert!(linalg::frobenius(d.as_ref()) < 1e-12);
        }
    }
}
