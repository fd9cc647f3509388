//! Graph construction, graph shift operators and unitary GFT matrices.
//!
//! Graphs are stored as dense symmetric adjacency matrices. The GFT matrix of a
//! symmetric shift operator `Z = V Λ Vᵀ` is `F = Vᵀ`, which is real orthogonal.
//! Haar-random and synthetic unitaries are provided for benchmarking; the
//! synthetic constructor records its eigendecomposition so that exact
//! fractional powers are available without an eigensolver.

use std::f64::consts::PI;

use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Maximum tolerated `‖F F^H − I‖_F / √N` for a GFT matrix.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Phase margins below this value (0.05π) trigger a Gibbs-regime warning.
pub const PHASE_MARGIN_WARN: f64 = 0.05 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Grid { rows: usize, cols: usize },
    Knn { k: usize },
    Custom,
}

/// Undirected weighted graph with a dense adjacency matrix.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Mat<f64>,
    kind: GraphKind,
}

impl Graph {
    /// Validates a custom adjacency matrix: square, symmetric, zero diagonal, finite nonnegative weights.
    pub fn from_adjacency(adjacency: Mat<f64>) -> Result<Self> {
        Self::validated(adjacency, GraphKind::Custom)
    }

    fn validated(adjacency: Mat<f64>, kind: GraphKind) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Shape(format!(
                "adjacency must be square, got {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        for j in 0..n {
            if adjacency[(j, j)] != 0.0 {
                return Err(Error::Domain(format!("nonzero diagonal at node {j}")));
            }
            for i in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Domain(format!("invalid weight {w} at ({i}, {j})")));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::Domain(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { adjacency, kind })
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Mat<f64> {
        &self.adjacency
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Weighted degree of node `i`.
    pub fn degree(&self, i: usize) -> f64 {
        (0..self.n()).map(|j| self.adjacency[(i, j)]).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] != 0.0
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|j| (0..j).filter(|&i| self.adjacency[(i, j)] != 0.0).count())
            .sum()
    }
}

/// 4-neighbour lattice; node `(r, c)` has index `r·cols + c`, no wraparound.
pub fn build_grid_graph(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::Size(format!(
            "grid must be at least 1x1, got {rows}x{cols}"
        )));
    }
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Size(format!("{rows}x{cols} grid overflows the index range")))?;
    // dense storage needs n² cells as well
    n.checked_mul(n).ok_or_else(|| {
        Error::Size(format!(
            "{n}-node dense adjacency overflows the index range"
        ))
    })?;
    let mut a = Mat::<f64>::zeros(n, n);
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                a[(i, i + 1)] = 1.0;
                a[(i + 1, i)] = 1.0;
            }
            if r + 1 < rows {
                a[(i, i + cols)] = 1.0;
                a[(i + cols, i)] = 1.0;
            }
        }
    }
    Ok(Graph {
        adjacency: a,
        kind: GraphKind::Grid { rows, cols },
    })
}

/// Binary k-nearest-neighbour graph under Euclidean distance, symmetrized by union.
///
/// Distance ties are broken by the smaller node index.
pub fn build_knn_graph<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<Graph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!(
            "k must satisfy 1 <= k < N, got k={k} with N={n}"
        )));
    }
    let dim = points[0].as_ref().len();
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::Shape(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
    }

    let mut a = Mat::<f64>::zeros(n, n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let pi = points[i].as_ref();
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| {
            let d2: f64 = pi
                .iter()
                .zip(points[j].as_ref())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            (d2, j)
        }));
        let by_dist_then_index =
            |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_dist_then_index);
        }
        for &(_, j) in &cand[..k] {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
    }
    Ok(Graph {
        adjacency: a,
        kind: GraphKind::Knn { k },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `L = D − A`
    CombinatorialLaplacian,
    /// `L_sym = I − D^{-1/2} A D^{-1/2}`; isolated nodes get a zero row and column.
    SymmetricNormalizedLaplacian,
    Adjacency,
}

/// Real symmetric graph shift operator.
#[derive(Debug, Clone)]
pub struct ShiftOperator {
    matrix: Mat<f64>,
    normalization: Normalization,
}

impl ShiftOperator {
    /// Wraps a symmetric matrix (relative asymmetry at most 1e-12).
    pub fn new(matrix: Mat<f64>, normalization: Normalization) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Shape("shift operator must be square".into()));
        }
        let scale = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .map(|(i, j)| matrix[(i, j)].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for j in 0..n {
            for i in 0..j {
                let d = (matrix[(i, j)] - matrix[(j, i)]).abs();
                if d > 1e-12 * scale {
                    return Err(Error::Domain(format!(
                        "shift operator not symmetric at ({i}, {j}): |Δ| = {d:e}"
                    )));
                }
            }
        }
        Ok(Self {
            matrix,
            normalization,
        })
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
}

pub fn shift_operator(g: &Graph, norm: Normalization) -> ShiftOperator {
    let n = g.n();
    let a = g.adjacency();
    let matrix = match norm {
        Normalization::Adjacency => a.clone(),
        Normalization::CombinatorialLaplacian => {
            let deg: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
            Mat::from_fn(n, n, |i, j| if i == j { deg[i] } else { -a[(i, j)] })
        }
        Normalization::SymmetricNormalizedLaplacian => {
            let inv_sqrt: Vec<f64> = (0..n)
                .map(|i| {
                    let d = g.degree(i);
                    if d > 0.0 {
                        1.0 / d.sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            Mat::from_fn(n, n, |i, j| {
                let off = inv_sqrt[i] * a[(i, j)] * inv_sqrt[j];
                if i == j {
                    // identity only on nodes with nonzero degree
                    if inv_sqrt[i] > 0.0 {
                        1.0 - off
                    } else {
                        0.0
                    }
                } else {
                    -off
                }
            })
        }
    };
    ShiftOperator {
        matrix,
        normalization: norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Graph,
    Haar,
    Synthetic,
}

/// Eigendecomposition `F = V diag(e^{jθ}) V^H` known by construction.
#[derive(Debug, Clone)]
pub struct KnownSpectrum {
    pub v: CMat,
    pub phases: Vec<f64>,
}

/// A unitary GFT matrix together with where it came from.
#[derive(Debug, Clone)]
pub struct GftMatrix {
    f: CMat,
    provenance: Provenance,
    known_spectrum: Option<KnownSpectrum>,
    fingerprint: u64,
}

impl GftMatrix {
    /// Wraps a matrix after checking `‖F F^H − I‖_F / √N ≤ 1e-10`.
    pub fn new(f: CMat, provenance: Provenance) -> Result<Self> {
        Self::checked(f, provenance, None)
    }

    /// Wraps a matrix whose eigendecomposition is known.
    pub fn with_known_spectrum(f: CMat, spectrum: KnownSpectrum) -> Result<Self> {
        let n = f.nrows();
        if spectrum.v.nrows() != n || spectrum.v.ncols() != n || spectrum.phases.len() != n {
            return Err(Error::Shape(
                "known spectrum does not match matrix size".into(),
            ));
        }
        Self::checked(f, Provenance::Synthetic, Some(spectrum))
    }

    fn checked(f: CMat, provenance: Provenance, known: Option<KnownSpectrum>) -> Result<Self> {
        if f.nrows() != f.ncols() {
            return Err(Error::Shape(format!(
                "GFT matrix must be square, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        let residual = linalg::unitarity_residual(f.as_ref());
        if !(residual <= UNITARITY_TOL) {
            return Err(Error::numerical("GFT matrix is not unitary", residual));
        }
        let fingerprint = linalg::fingerprint(f.as_ref());
        Ok(Self {
            f,
            provenance,
            known_spectrum: known,
            fingerprint,
        })
    }

    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.f
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn known_spectrum(&self) -> Option<&KnownSpectrum> {
        self.known_spectrum.as_ref()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// The matrix as a real matrix, if all imaginary parts are zero.
    pub fn real_matrix(&self) -> Option<Mat<f64>> {
        linalg::as_real(self.f.as_ref())
    }
}

/// Sign-fixing pivot: first component whose magnitude is within rounding of the largest.
fn pivot_index(col: &[f64]) -> usize {
    let max = col.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    col.iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-10))
        .unwrap_or(0)
}

/// GFT matrix `F = Vᵀ` of a symmetric shift operator `Z = V Λ Vᵀ`.
///
/// Eigenvalues are ascending. Each eigenvector has its first largest-magnitude
/// component made positive; degenerate clusters are re-orthonormalized with
/// modified Gram–Schmidt and ordered by that pivot index.
pub fn gft_from_shift(z: &ShiftOperator) -> Result<GftMatrix> {
    let n = z.matrix().nrows();
    if n == 0 {
        return Err(Error::Size("empty shift operator".into()));
    }
    let evd = z
        .matrix()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolver failed: {e:?}"), f64::NAN))?;
    let lambda: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let u = evd.U();
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| u[(i, j)]).collect())
        .collect();

    let scale = lambda.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && lambda[end] - lambda[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            modified_gram_schmidt(&mut cols[start..end]);
        }
        for col in &mut cols[start..end] {
            let p = pivot_index(col);
            if col[p] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let mut cluster: Vec<usize> = (start..end).collect();
        cluster.sort_by_key(|&j| pivot_index(&cols[j]));
        order.extend(cluster);
        start = end;
    }

    // F = Vᵀ: row k of F is eigenvector order[k]
    let f = Mat::from_fn(n, n, |k, i| c64::new(cols[order[k]][i], 0.0));
    GftMatrix::new(f, Provenance::Graph)
}

fn modified_gram_schmidt(cols: &mut [Vec<f64>]) {
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for q in done.iter() {
            let proj: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= proj * qi);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Haar-distributed unitary from the phase-corrected QR of a complex Gaussian matrix.
pub(crate) fn haar_matrix(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Mat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c64::new(re, im)
    });
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<c64> = (0..n)
        .map(|j| {
            let d = r[(j, j)];
            let m = d.norm();
            if m > 0.0 {
                d / m
            } else {
                c64::new(1.0, 0.0)
            }
        })
        .collect();
    Mat::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

/// Haar-random unitary GFT matrix, deterministic in `seed`.
pub fn random_unitary(n: usize, seed: u64) -> Result<GftMatrix> {
    if n == 0 {
        return Err(Error::Size("random_unitary requires n >= 1".into()));
    }
    GftMatrix::new(haar_matrix(n, seed), Provenance::Haar)
}

/// `F = V diag(e^{jθ}) V^H` with Haar-random `V` and prescribed phases `θ ∈ (−π, π)`.
pub fn synthetic_unitary(phases: &[f64], seed: u64) -> Result<GftMatrix> {
    if phases.is_empty() {
        return Err(Error::Size(
            "synthetic_unitary requires at least one phase".into(),
        ));
    }
    if let Some((k, t)) = phases
        .iter()
        .enumerate()
        .find(|(_, t)| !t.is_finite() || t.abs() >= PI)
    {
        return Err(Error::Domain(format!(
            "phase {k} = {t} must lie strictly inside (-π, π)"
        )));
    }
    let n = phases.len();
    let v = haar_matrix(n, seed);
    let f = spectral_product(&v, phases.iter().map(|&t| c64::cis(t)));
    GftMatrix::with_known_spectrum(
        f,
        KnownSpectrum {
            v,
            phases: phases.to_vec(),
        },
    )
}

/// `V diag(d) V^H`.
pub(crate) fn spectral_product(v: &CMat, d: impl Iterator<Item = c64>) -> CMat {
    let d: Vec<c64> = d.collect();
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * d[j]);
    linalg::mul(scaled.as_ref(), v.adjoint(), linalg::parallelism())
}

/// Dense unitary `A ⊗ B` of two Haar factors with its spectrum assembled from the factors.
///
/// Gives an `(m·k)`-dimensional dense unitary whose eigendecomposition and
/// integer powers cost `O(N²)` to form; used where only the cost of dense
/// operations matters (timing).
#[derive(Debug, Clone)]
pub struct KroneckerUnitary {
    pub a: CMat,
    pub b: CMat,
}

impl KroneckerUnitary {
    pub fn random(m: usize, k: usize, seed: u64) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Size("Kronecker factors must be nonempty".into()));
        }
        Ok(Self {
            a: haar_matrix(m, seed),
            b: haar_matrix(k, seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        })
    }

    /// Factors `n = m·k` with `m` the largest divisor not exceeding `√n`.
    pub fn random_of_size(n: usize, seed: u64) -> Result<Self> {
        let mut m = (n as f64).sqrt() as usize;
        while m > 1 && n % m != 0 {
            m -= 1;
        }
        Self::random(m.max(1), n / m.max(1), seed)
    }

    pub fn n(&self) -> usize {
        self.a.nrows() * self.b.nrows()
    }

    /// The dense matrix with its known spectrum attached.
    pub fn to_gft(&self) -> Result<GftMatrix> {
        let fa = GftMatrix::new(self.a.clone(), Provenance::Haar)?;
        let fb = GftMatrix::new(self.b.clone(), Provenance::Haar)?;
        let ea = crate::transform::eigendecompose_unitary(&fa)?;
        let eb = crate::transform::eigendecompose_unitary(&fb)?;
        let v = linalg::kron(ea.v().as_ref(), eb.v().as_ref());
        let phases: Vec<f64> = ea
            .theta()
            .iter()
            .flat_map(|&ta| {
                eb.theta()
                    .iter()
                    .map(move |&tb| linalg::wrap_phase(ta + tb))
            })
            .collect();
        let f = linalg::kron(self.a.as_ref(), self.b.as_ref());
        GftMatrix::with_known_spectrum(f, KnownSpectrum { v, phases })
    }
}

/// `min_k (π − |θ_k|)` over the eigenphases of `f`. Logs a warning below [`PHASE_MARGIN_WARN`].
pub fn phase_margin(f: &GftMatrix) -> Result<f64> {
    let phases = match f.known_spectrum() {
        Some(s) => s.phases.clone(),
        None => crate::transform::eigenphases(f)?,
    };
    let margin = phases
        .iter()
        .map(|t| (PI - t.abs()).max(0.0))
        .fold(PI, f64::min);
    if margin < PHASE_MARGIN_WARN {
        log::warn!(
            "phase margin {margin:.4} is below 0.05π: eigenvalues near -1 put the truncated series in the Gibbs regime"
        );
    }
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_symmetric_zero_diag(g: &Graph) {
        let a = g.adjacency();
        for i in 0..g.n() {
            assert_eq!(a[(i, i)], 0.0);
            for j in 0..g.n() {
                assert_eq!(a[(i, j)], a[(j, i)]);
                assert!(a[(i, j)] >= 0.0);
            }
        }
    }

    #[test]
    fn grid_1x1_is_isolated_vertex() {
        let g = build_grid_graph(1, 1).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn grid_2x2_is_a_4_cycle() {
        let g = build_grid_graph(2, 2).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 4);
        assert!((0..4).all(|i| g.degree(i) == 2.0));
        assert_symmetric_zero_diag(&g);
    }

    #[test]
    fn grid_3x3_degrees() {
        let g = build_grid_graph(3, 3).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.edge_count(), 12);
        for (i, want) in [2.0, 3.0, 2.0, 3.0, 4.0, 3.0, 2.0, 3.0, 2.0]
            .iter()
            .enumerate()
        {
            assert_eq!(g.degree(i), *want, "node {i}");
        }
        // row-major indexing: (1,2) -> 5 neighbours (0,2)=2, (2,2)=8, (1,1)=4
        assert!(g.has_edge(5, 2) && g.has_edge(5, 8) && g.has_edge(5, 4));
        assert!(!g.has_edge(5, 6), "no wraparound");
        assert_symmetric_zero_diag(&g);
    }

    #[test]
    fn grid_rejects_zero_and_overflow() {
        assert!(matches!(build_grid_graph(0, 3), Err(Error::Size(_))));
        assert!(matches!(
            build_grid_graph(usize::MAX, 2),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn knn_line_example() {
        let pts = [[0.0], [1.0], [10.0]];
        let g = build_knn_graph(&pts, 1).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && !g.has_edge(0, 2));
    }

    #[test]
    fn knn_full_k_is_complete() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![(i * i) as f64, i as f64]).collect();
        let g = build_knn_graph(&pts, 5).unwrap();
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn knn_square_has_no_diagonals() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let g = build_knn_graph(&pts, 2).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!(!g.has_edge(0, 2) && !g.has_edge(1, 3));
    }

    #[test]
    fn knn_ties_prefer_smaller_index() {
        // node 1 is equidistant from 0 and 2; with k=1 it must pick 0
        let pts = [[0.0], [1.0], [2.0], [10.0]];
        let g = build_knn_graph(&pts, 1).unwrap();
        assert!(g.has_edge(1, 0));
        // duplicates rank first
        let dup = [[3.0], [3.0], [0.0]];
        let g = build_knn_graph(&dup, 1).unwrap();
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn knn_rejects_bad_k() {
        let pts = [[0.0], [1.0], [2.0]];
        assert!(matches!(build_knn_graph(&pts, 3), Err(Error::Parameter(_))));
        assert!(matches!(build_knn_graph(&pts, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn shift_operator_examples() {
        let path = Graph::from_adjacency(Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 }))
            .unwrap();
        let l = shift_operator(&path, Normalization::CombinatorialLaplacian);
        assert_eq!(l.matrix()[(0, 0)], 1.0);
        assert_eq!(l.matrix()[(0, 1)], -1.0);
        assert_eq!(l.matrix()[(1, 0)], -1.0);
        assert_eq!(l.matrix()[(1, 1)], 1.0);

        let tri = Graph::from_adjacency(Mat::from_fn(3, 3, |i, j| if i != j { 1.0 } else { 0.0 }))
            .unwrap();
        let l = shift_operator(&tri, Normalization::CombinatorialLaplacian);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.matrix()[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }

        let a = shift_operator(&tri, Normalization::Adjacency);
        assert_eq!(a.matrix(), tri.adjacency());
    }

    #[test]
    fn symmetric_normalized_isolated_nodes_are_zero() {
        let empty = Graph::from_adjacency(Mat::zeros(3, 3)).unwrap();
        let l = shift_operator(&empty, Normalization::SymmetricNormalizedLaplacian);
        assert!((0..3).all(|i| (0..3).all(|j| l.matrix()[(i, j)] == 0.0)));

        let path = Graph::from_adjacency(Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 }))
            .unwrap();
        let l = shift_operator(&path, Normalization::SymmetricNormalizedLaplacian);
        assert_eq!(l.matrix()[(0, 0)], 1.0);
        assert_eq!(l.matrix()[(0, 1)], -1.0);
    }

    #[test]
    fn custom_adjacency_validation() {
        let asym = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 });
        assert!(matches!(Graph::from_adjacency(asym), Err(Error::Domain(_))));
        let diag = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!(matches!(Graph::from_adjacency(diag), Err(Error::Domain(_))));
        let neg = Mat::from_fn(2, 2, |i, j| if i != j { -1.0 } else { 0.0 });
        assert!(matches!(Graph::from_adjacency(neg), Err(Error::Domain(_))));
    }

    #[test]
    fn gft_of_path_2() {
        let path = Graph::from_adjacency(Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 }))
            .unwrap();
        let f = gft_from_shift(&shift_operator(
            &path,
            Normalization::CombinatorialLaplacian,
        ))
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[s, s], [s, -s]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((f.matrix()[(i, j)] - c64::new(want[i][j], 0.0)).norm() < 1e-14);
            }
        }
        assert_eq!(f.provenance(), Provenance::Graph);
    }

    #[test]
    fn gft_of_identity_is_identity() {
        let z = ShiftOperator::new(Mat::identity(5, 5), Normalization::Adjacency).unwrap();
        let f = gft_from_shift(&z).unwrap();
        let diff = f.matrix() - CMat::identity(5, 5);
        assert_eq!(linalg::frobenius(diff.as_ref()), 0.0);
    }

    #[test]
    fn gft_of_3x3_grid_is_orthogonal() {
        let g = build_grid_graph(3, 3).unwrap();
        let f = gft_from_shift(&shift_operator(&g, Normalization::CombinatorialLaplacian)).unwrap();
        assert!(linalg::unitarity_residual(f.matrix().as_ref()) <= 1e-12);
        assert!(f.real_matrix().is_some());
        // every row (eigenvector) has a positive pivot
        let r = f.real_matrix().unwrap();
        for k in 0..9 {
            let row: Vec<f64> = (0..9).map(|i| r[(k, i)]).collect();
            assert!(row[pivot_index(&row)] > 0.0);
        }
    }

    #[test]
    fn gft_is_deterministic() {
        let g = build_grid_graph(4, 5).unwrap();
        let z = shift_operator(&g, Normalization::SymmetricNormalizedLaplacian);
        let f1 = gft_from_shift(&z).unwrap();
        let f2 = gft_from_shift(&z).unwrap();
        assert_eq!(f1.fingerprint(), f2.fingerprint());
    }

    #[test]
    fn random_unitary_small_cases() {
        let f = random_unitary(1, 3).unwrap();
        assert!((f.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let a = random_unitary(16, 42).unwrap();
        let b = random_unitary(16, 42).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(
            a.fingerprint(),
            random_unitary(16, 43).unwrap().fingerprint()
        );
        assert!(matches!(random_unitary(0, 1), Err(Error::Size(_))));
    }

    #[test]
    fn random_unitary_256_residual() {
        let f = random_unitary(256, 7).unwrap();
        assert!(linalg::unitarity_residual(f.matrix().as_ref()) <= 1e-12);
    }

    #[test]
    fn haar_trace_sanity() {
        // E|tr F|² = 1 for Haar unitaries
        let mean: f64 = (0..200)
            .map(|s| {
                let f = random_unitary(8, 1000 + s).unwrap();
                let tr: c64 = (0..8).map(|i| f.matrix()[(i, i)]).sum();
                tr.norm_sqr()
            })
            .sum::<f64>()
            / 200.0;
        assert!((0.7..=1.3).contains(&mean), "mean |tr F|² = {mean}");
    }

    #[test]
    fn synthetic_unitary_cases() {
        let f = synthetic_unitary(&[0.0; 6], 1).unwrap();
        let diff = f.matrix() - CMat::identity(6, 6);
        assert!(linalg::frobenius(diff.as_ref()) < 1e-13);

        let f = synthetic_unitary(&[PI / 2.0, -PI / 2.0], 2).unwrap();
        let m = f.matrix();
        let m2 = linalg::mul(m.as_ref(), m.as_ref(), faer::Par::Seq);
        let m4 = linalg::mul(m2.as_ref(), m2.as_ref(), faer::Par::Seq);
        let diff = &m4 - CMat::identity(2, 2);
        assert!(linalg::frobenius(diff.as_ref()) < 1e-13);
        assert_eq!(
            f.known_spectrum().unwrap().phases,
            vec![PI / 2.0, -PI / 2.0]
        );

        assert!(matches!(
            synthetic_unitary(&[0.0, PI], 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            synthetic_unitary(&[-3.5], 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn phase_margin_examples() {
        let id = synthetic_unitary(&[0.0; 3], 5).unwrap();
        assert!((phase_margin(&id).unwrap() - PI).abs() < 1e-15);

        let f = synthetic_unitary(&[0.9 * PI, -0.5 * PI], 5).unwrap();
        assert!((phase_margin(&f).unwrap() - 0.1 * PI).abs() < 1e-12);

        // path-2 GFT has eigenvalues ±1
        let path = Graph::from_adjacency(Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 }))
            .unwrap();
        let f = gft_from_shift(&shift_operator(
            &path,
            Normalization::CombinatorialLaplacian,
        ))
        .unwrap();
        let m = phase_margin(&f).unwrap();
        assert!(m < 1e-7, "margin {m}");
        assert!(m < PHASE_MARGIN_WARN);
    }

    #[test]
    fn kronecker_unitary_spectrum_reconstructs() {
        let k = KroneckerUnitary::random_of_size(12, 9).unwrap();
        assert_eq!(k.n(), 12);
        let f = k.to_gft().unwrap();
        let s = f.known_spectrum().unwrap();
        let rebuilt = spectral_product(&s.v, s.phases.iter().map(|&t| c64::cis(t)));
        let diff = &rebuilt - f.matrix();
        assert!(linalg::frobenius(diff.as_ref()) < 1e-12);
    }
}
