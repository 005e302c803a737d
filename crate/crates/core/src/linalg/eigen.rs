use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use super::svd::jacobi_svd;
use super::{check_finite, check_square, complex_schur, to_complex, to_complex_vector, CMatrix, CVector};
use crate::error::{Error, Result};

/// Relative clustering tolerance: eigenvalues closer than
/// `tol · (1 + ‖Q‖)` are treated as one.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

const CONTOUR_NODES: usize = 128;
const MAX_RECONSTRUCTION_RESIDUAL: f64 = 1e-6;

/// One distinct eigenvalue with its Jordan chains.
///
/// Each chain satisfies `(Q − λI)·chain[k+1] = chain[k]` and
/// `(Q − λI)·chain[0] = 0`. Chains are listed longest first.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    pub eigenvalue: Complex64,
    pub algebraic: usize,
    pub chains: Vec<Vec<CVector>>,
}

impl EigenBlock {
    pub fn geometric(&self) -> usize {
        self.chains.len()
    }

    /// Length of the longest Jordan chain.
    pub fn index(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.eigenvalue.im == 0.0
    }
}

/// Eigenvalues with multiplicities and a Jordan basis of a real matrix.
///
/// Blocks are sorted by ascending real part, then ascending |Im|, with the
/// positive imaginary part first inside a conjugate pair. Conjugate blocks
/// carry exactly conjugate eigenvalues and chains; real blocks carry real
/// chains.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    pub blocks: Vec<EigenBlock>,
    basis: CMatrix,
    inverse: CMatrix,
    jordan: CMatrix,
}

impl EigenStructure {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Eigenvalues repeated by algebraic multiplicity, in block order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.eigenvalue, b.algebraic))
            .collect()
    }

    /// Columns are the chain vectors of every block, in order.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn jordan_matrix(&self) -> &CMatrix {
        &self.jordan
    }

    /// `V J V⁻¹`.
    pub fn reconstruct(&self) -> CMatrix {
        &self.basis * &self.jordan * &self.inverse
    }

    /// Coordinates of `x` in the Jordan basis.
    pub fn coordinates(&self, x: &DVector<f64>) -> Result<CVector> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(&self.inverse * to_complex_vector(x))
    }

    /// For every block, the vectors `w_j = (Q − λ)^j P_λ x`, `j = 0..index`.
    pub fn block_powers(&self, x: &DVector<f64>) -> Result<Vec<Vec<CVector>>> {
        let c = self.coordinates(x)?;
        let n = self.dim();
        let mut offset = 0;
        let mut out = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let mut w = vec![CVector::zeros(n); block.index()];
            for chain in &block.chains {
                for (i, _) in chain.iter().enumerate() {
                    let ci = c[offset + i];
                    for (j, wj) in w.iter_mut().enumerate().take(i + 1) {
                        *wj += &chain[i - j] * ci;
                    }
                }
                offset += chain.len();
            }
            out.push(w);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Real,
    Upper,
}

#[derive(Clone, Debug)]
struct Class {
    kind: Kind,
    members: Vec<usize>,
}

/// Computed eigenvalues made exactly conjugate-symmetric; `mirror[i]` is
/// the index of the conjugate of eigenvalue `i` (itself when real).
struct Spectrum {
    values: Vec<Complex64>,
    mirror: Vec<usize>,
}

impl Spectrum {
    fn mean(&self, idx: &[usize], real: bool) -> Complex64 {
        let s: Complex64 = idx.iter().map(|&i| self.values[i]).sum();
        let m = s / idx.len() as f64;
        if real {
            Complex64::new(m.re, 0.0)
        } else {
            m
        }
    }

    fn spread(&self, idx: &[usize], mu: Complex64) -> f64 {
        idx.iter().map(|&i| (self.values[i] - mu).norm()).fold(0.0, f64::max)
    }
}

/// Eigen-structure of `q` with Jordan chains.
///
/// `tol` is the relative clustering tolerance (see [`DEFAULT_CLUSTER_TOL`]).
/// Nearly coincident eigenvalues are merged into one defective eigenvalue
/// when the restriction of `Q − μ` to their joint invariant subspace is
/// numerically nilpotent and far from zero; this is how perturbed Jordan
/// blocks are recognised.
pub fn eigen_structure(q: &DMatrix<f64>, tol: f64) -> Result<EigenStructure> {
    check_square(q)?;
    check_finite(q)?;
    let n = q.nrows();
    if n == 0 {
        let e = CMatrix::zeros(0, 0);
        return Ok(EigenStructure { blocks: vec![], basis: e.clone(), inverse: e.clone(), jordan: e });
    }
    let scale = 1.0 + q.norm();
    let thr = tol * scale;
    let (_, t) = complex_schur(q)?;
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let spectrum = symmetric_spectrum(values, thr);
    let classes = classify(q, &spectrum, thr, scale);

    let mut blocks = Vec::new();
    for class in &classes {
        let real = class.kind == Kind::Real;
        let idx = class.members.clone();
        let mu = spectrum.mean(&idx, real);
        let (b, m) = restrict(q, &spectrum.values, &idx, mu, real)?;
        let chains: Vec<Vec<CVector>> = if real {
            let br = b.map(|z| z.re);
            let mr = m.map(|z| z.re);
            jordan_chains(&mr, scale)
                .into_iter()
                .map(|ch| ch.iter().map(|c| to_complex_vector(&(&br * c))).collect())
                .collect()
        } else {
            jordan_chains(&m, scale)
                .into_iter()
                .map(|ch| ch.iter().map(|c| &b * c).collect())
                .collect()
        };
        if !real {
            blocks.push(EigenBlock {
                eigenvalue: mu.conj(),
                algebraic: idx.len(),
                chains: chains.iter().map(|ch| ch.iter().map(|v| v.map(|z| z.conj())).collect()).collect(),
            });
        }
        blocks.push(EigenBlock { eigenvalue: mu, algebraic: idx.len(), chains });
    }
    blocks.sort_by(|a, b| {
        let ka = (a.eigenvalue.re, a.eigenvalue.im.abs(), a.eigenvalue.im < 0.0);
        let kb = (b.eigenvalue.re, b.eigenvalue.im.abs(), b.eigenvalue.im < 0.0);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });

    let columns: Vec<CVector> = blocks.iter().flat_map(|b| b.chains.iter().flatten().cloned()).collect();
    if columns.len() != n {
        return Err(Error::IllConditioned { residual: f64::INFINITY });
    }
    let basis = CMatrix::from_columns(&columns);
    let mut jordan = CMatrix::zeros(n, n);
    let mut k = 0;
    for b in &blocks {
        for chain in &b.chains {
            for i in 0..chain.len() {
                jordan[(k + i, k + i)] = b.eigenvalue;
                if i > 0 {
                    jordan[(k + i - 1, k + i)] = Complex64::new(1.0, 0.0);
                }
            }
            k += chain.len();
        }
    }
    let inverse = basis
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { residual: f64::INFINITY })?;
    let out = EigenStructure { blocks, basis, inverse, jordan };
    let residual = (out.reconstruct() - to_complex(q)).norm() / q.norm().max(f64::MIN_POSITIVE);
    if !(residual <= MAX_RECONSTRUCTION_RESIDUAL) && q.norm() > 0.0 {
        return Err(Error::IllConditioned { residual });
    }
    Ok(out)
}

fn symmetric_spectrum(mut values: Vec<Complex64>, thr: f64) -> Spectrum {
    let n = values.len();
    let mut uppers: Vec<usize> = (0..n).filter(|&i| values[i].im > thr).collect();
    let mut lowers: Vec<usize> = (0..n).filter(|&i| values[i].im < -thr).collect();
    uppers.sort_by(|&a, &b| values[b].im.total_cmp(&values[a].im));
    lowers.sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im));
    let keep = uppers.len().min(lowers.len());
    uppers.truncate(keep);
    let mut mirror: Vec<usize> = (0..n).collect();
    for &u in &uppers {
        let target = values[u].conj();
        let (pos, _) = lowers
            .iter()
            .enumerate()
            .map(|(p, &l)| (p, (values[l] - target).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let l = lowers.remove(pos);
        mirror[u] = l;
        mirror[l] = u;
        let avg = 0.5 * (values[u] + values[l].conj());
        values[u] = avg;
        values[l] = avg.conj();
    }
    for i in 0..n {
        if mirror[i] == i {
            values[i].im = 0.0;
        }
    }
    Spectrum { values, mirror }
}

struct Node {
    members: Vec<usize>,
    height: f64,
    children: Option<(usize, usize)>,
}

/// Single-linkage dendrogram over the spectrum, joining only pairs closer
/// than `radius`. Returns the nodes and the roots.
fn dendrogram(values: &[Complex64], radius: f64) -> (Vec<Node>, Vec<usize>) {
    let n = values.len();
    let mut nodes: Vec<Node> = (0..n).map(|i| Node { members: vec![i], height: 0.0, children: None }).collect();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = (values[i] - values[j]).norm();
            if d <= radius {
                edges.push((d, i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut owner: Vec<usize> = (0..n).collect();
    for (d, i, j) in edges {
        let (a, b) = (owner[i], owner[j]);
        if a == b {
            continue;
        }
        let members = [nodes[a].members.clone(), nodes[b].members.clone()].concat();
        let id = nodes.len();
        for &m in &members {
            owner[m] = id;
        }
        nodes.push(Node { members, height: d, children: Some((a, b)) });
    }
    let mut roots: Vec<usize> = owner.clone();
    roots.sort_unstable();
    roots.dedup();
    (nodes, roots)
}

/// Partition of the spectrum into distinct eigenvalues. Nodes of the
/// dendrogram are kept whole when they are tighter than the clustering
/// threshold or when they pass the defect test; otherwise they are split.
fn classify(q: &DMatrix<f64>, sp: &Spectrum, thr: f64, scale: f64) -> Vec<Class> {
    let eps = 1e4 * f64::EPSILON;
    let radius = |k: usize| 10.0 * scale * eps.powf(1.0 / k as f64);
    let n = sp.values.len();
    let (nodes, roots) = dendrogram(&sp.values, radius(n.clamp(2, 4)).max(thr));
    let mut out = Vec::new();
    let mut stack = roots;
    while let Some(id) = stack.pop() {
        let node = &nodes[id];
        let closed = node.members.iter().all(|i| node.members.contains(&sp.mirror[*i]));
        let real = closed;
        let uppers = node.members.iter().filter(|&&i| sp.values[i].im > 0.0).count();
        let lowers = node.members.iter().filter(|&&i| sp.values[i].im < 0.0).count();
        if !closed && lowers == node.members.len() {
            continue;
        }
        let mixed = !closed && uppers < node.members.len();
        let keep = match node.children {
            Some(_) if mixed => false,
            None => true,
            Some(_) if node.height <= thr => true,
            Some(_) => {
                let mu = sp.mean(&node.members, real);
                sp.spread(&node.members, mu) <= radius(node.members.len())
                    && is_defective_cluster(q, sp, &node.members, real, scale)
            }
        };
        if keep {
            out.push(Class { kind: if real { Kind::Real } else { Kind::Upper }, members: node.members.clone() });
        } else if let Some((a, b)) = node.children {
            stack.push(a);
            stack.push(b);
        }
    }
    out
}

fn is_defective_cluster(q: &DMatrix<f64>, sp: &Spectrum, idx: &[usize], real: bool, scale: f64) -> bool {
    let mu = sp.mean(idx, real);
    let Ok((_, m)) = restrict(q, &sp.values, idx, mu, real) else {
        return false;
    };
    let k = idx.len();
    let spread = sp.spread(idx, mu);
    let mut power = m.clone();
    for _ in 1..k {
        power = &power * &m;
    }
    let nil_tol = 1e4 * f64::EPSILON * scale * m.norm().powi(k as i32 - 1);
    power.norm() <= nil_tol && m.norm() >= 100.0 * spread
}

/// Orthonormal basis `B` of the invariant subspace belonging to the
/// eigenvalues `idx`, and `M = Bᴴ(Q − μ)B`.
fn restrict(
    q: &DMatrix<f64>,
    values: &[Complex64],
    idx: &[usize],
    mu: Complex64,
    real: bool,
) -> Result<(CMatrix, CMatrix)> {
    let n = q.nrows();
    let k = idx.len();
    let inside: HashSet<usize> = idx.iter().copied().collect();
    let outside: Vec<Complex64> = (0..n).filter(|i| !inside.contains(i)).map(|i| values[i]).collect();
    let qc = to_complex(q);
    let shifted = &qc - CMatrix::identity(n, n) * mu;

    let basis = if outside.is_empty() {
        CMatrix::identity(n, n)
    } else {
        let gap = outside.iter().map(|v| (v - mu).norm()).fold(f64::INFINITY, f64::min);
        let spread = idx.iter().map(|&i| (values[i] - mu).norm()).fold(0.0, f64::max);
        if spread >= 0.5 * gap {
            return Err(Error::IllConditioned { residual: spread / gap });
        }
        let rho = 0.5 * (gap + spread);
        let mut p = CMatrix::zeros(n, n);
        for j in 0..CONTOUR_NODES {
            let phi = 2.0 * PI * (j as f64 + 0.5) / CONTOUR_NODES as f64;
            let w = Complex64::from_polar(rho, phi);
            let resolvent = (CMatrix::identity(n, n) * (mu + w) - &qc)
                .try_inverse()
                .ok_or(Error::IllConditioned { residual: f64::INFINITY })?;
            p += resolvent * w;
        }
        p /= Complex64::new(CONTOUR_NODES as f64, 0.0);
        if real {
            p = p.map(|z| Complex64::new(z.re, 0.0));
        }
        leading_left_vectors(&p, k)?
    };
    let m = basis.adjoint() * shifted * &basis;
    Ok((basis, m))
}

fn leading_left_vectors(p: &CMatrix, k: usize) -> Result<CMatrix> {
    let svd = jacobi_svd(p);
    let sv = &svd.sigma;
    let top = sv[0];
    if k == 0 || sv[k - 1] < 1e-6 * top || (k < sv.len() && sv[k] > 1e-6 * top) {
        return Err(Error::IllConditioned { residual: if k < sv.len() { sv[k] / top } else { 0.0 } });
    }
    Ok(svd.u.columns(0, k).into_owned())
}

/// Kernel basis (orthonormal columns) of `a`, singular values `≤ tol` count
/// as zero.
fn kernel<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, tol: f64) -> DMatrix<T> {
    let k = a.ncols();
    let svd = jacobi_svd(a);
    let cols: Vec<DVector<T>> = (0..k).filter(|&i| svd.sigma[i] <= tol).map(|i| svd.v.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(k, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column span, rank cut at `tol` relative to the
/// largest singular value.
fn range<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, tol: f64) -> DMatrix<T> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = jacobi_svd(a);
    let top = svd.sigma[0];
    let cols: Vec<DVector<T>> = (0..svd.sigma.len())
        .filter(|&i| top > 0.0 && svd.sigma[i] > tol * top)
        .map(|i| svd.u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Jordan chains of a numerically nilpotent `m`, built top-down from the
/// kernels of its powers. Chains are `[m^{j-1}u, …, mu, u]`.
fn jordan_chains<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>, scale: f64) -> Vec<Vec<DVector<T>>> {
    let k = m.nrows();
    let root_eps = f64::EPSILON.sqrt();
    let mut kernels: Vec<DMatrix<T>> = vec![DMatrix::zeros(k, 0)];
    let mut power = DMatrix::<T>::identity(k, k);
    for j in 1..=k {
        power = &power * m;
        let mut ker = kernel(&power, root_eps * scale.powi(j as i32));
        if j == k || ker.ncols() < kernels[j - 1].ncols() {
            ker = if j == k { DMatrix::identity(k, k) } else { kernels[j - 1].clone() };
        }
        let done = ker.ncols() == k;
        kernels.push(ker);
        if done {
            break;
        }
    }
    let index = kernels.len() - 1;
    let dims: Vec<usize> = kernels.iter().map(|x| x.ncols()).collect();
    let mut tops: Vec<(usize, DVector<T>)> = Vec::new();
    for j in (1..=index).rev() {
        let longer: Vec<DVector<T>> = tops
            .iter()
            .map(|(len, u)| {
                let mut v = u.clone();
                for _ in 0..(len - j) {
                    v = m * v;
                }
                v
            })
            .collect();
        let wanted = dims[j] - dims[j - 1];
        let new = wanted.saturating_sub(longer.len());
        if new == 0 {
            continue;
        }
        let mut span_cols: Vec<DVector<T>> = kernels[j - 1].column_iter().map(|c| c.into_owned()).collect();
        span_cols.extend(longer);
        let z = if span_cols.is_empty() {
            DMatrix::zeros(k, 0)
        } else {
            range(&DMatrix::from_columns(&span_cols), 1e-8)
        };
        let residual = &kernels[j] - &z * (z.adjoint() * &kernels[j]);
        let fresh = range(&residual, 1e-8);
        for c in fresh.column_iter().take(new) {
            tops.push((j, c.into_owned()));
        }
    }
    tops.sort_by(|a, b| b.0.cmp(&a.0));
    tops.into_iter()
        .map(|(len, u)| {
            let mut chain = vec![u];
            for _ in 1..len {
                let next = m * chain.last().unwrap();
                chain.push(next);
            }
            chain.reverse();
            chain
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_of_chains(q: &DMatrix<f64>, es: &EigenStructure) -> f64 {
        let qc = to_complex(q);
        let n = q.nrows();
        let mut worst: f64 = 0.0;
        for b in &es.blocks {
            let shifted = &qc - CMatrix::identity(n, n) * b.eigenvalue;
            for ch in &b.chains {
                worst = worst.max((&shifted * &ch[0]).norm() / ch[0].norm());
                for i in 1..ch.len() {
                    worst = worst.max((&shifted * &ch[i] - &ch[i - 1]).norm() / ch[i].norm());
                }
            }
        }
        worst
    }

    #[test]
    fn diagonal_matrix() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let es = eigen_structure(&q, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(es.blocks.len(), 2);
        assert_eq!(es.blocks[0].eigenvalue, Complex64::new(1.0, 0.0));
        assert_eq!(es.blocks[1].eigenvalue, Complex64::new(2.0, 0.0));
        let v = &es.blocks[0].chains[0][0];
        assert!(v[0].norm() < 1e-14 && (v[1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_pair_is_conjugate() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, -3.0, 1.0]);
        let es = eigen_structure(&q, DEFAULT_CLUSTER_TOL).unwrap();
        let (a, b) = (es.blocks[0].eigenvalue, es.blocks[1].eigenvalue);
        assert!((a - Complex64::new(1.0, 3.0)).norm() < 1e-12);
        assert_eq!(b, a.conj());
        assert!(residual_of_chains(&q, &es) < 1e-12);
    }

    #[test]
    fn critical_oscillator_is_one_jordan_block() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 2.0]);
        let es = eigen_structure(&q, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(es.blocks.len(), 1);
        let b = &es.blocks[0];
        assert_eq!((b.algebraic, b.geometric(), b.index()), (2, 1, 2));
        assert!((b.eigenvalue.re - 1.0).abs() < 1e-12 && b.eigenvalue.im == 0.0);
        assert!(residual_of_chains(&q, &es) < 1e-7);
    }

    #[test]
    fn derogatory_jordan_structure() {
        let mut q = DMatrix::<f64>::identity(4, 4) * 3.0;
        q[(0, 1)] = 1.0;
        q[(1, 2)] = 1.0;
        let p = DMatrix::from_row_slice(4, 4, &[
            1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 0.0, 1.0,
        ]);
        let q = &p * q * p.clone().try_inverse().unwrap();
        let es = eigen_structure(&q, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(es.blocks.len(), 1);
        let lens: Vec<usize> = es.blocks[0].chains.iter().map(Vec::len).collect();
        assert_eq!(lens, vec![3, 1]);
        assert!(residual_of_chains(&q, &es) < 1e-6);
    }

    #[test]
    fn close_but_distinct_eigenvalues_stay_apart() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 + 1e-6]));
        let es = eigen_structure(&q, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(es.blocks.len(), 2);
    }
}
