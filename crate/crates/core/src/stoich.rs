//! Stoichiometric structure: Wegscheider matrix, conservation laws and the
//! complex graph.

use nalgebra::DMatrix;
use num_traits::Zero;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::Result;
use crate::network::{check_nonnegative, ReactionNetwork};
use crate::rational::{self, Rat, RatMatrix};

/// Relative singular value cutoff for rank decisions on the floating path.
pub const SVD_RANK_TOL: f64 = 1e-10;

const SEMIFLOW_LIMIT: usize = 4096;

/// `N x R` matrix whose column `r` is `y'_r - y_r`.
pub fn wegscheider_matrix(net: &ReactionNetwork) -> DMatrix<f64> {
    let n = net.num_species();
    let mut w = DMatrix::zeros(n, net.num_reactions());
    for r in 0..net.num_reactions() {
        for (i, v) in net.reaction_vector(r).into_iter().enumerate() {
            w[(i, r)] = v;
        }
    }
    w
}

fn exact_wegscheider(net: &ReactionNetwork) -> Option<RatMatrix> {
    let n = net.num_species();
    let mut w = vec![vec![Rat::zero(); net.num_reactions()]; n];
    for r in 0..net.num_reactions() {
        let y = net.reactant(r).coeffs();
        let yp = net.product(r).coeffs();
        for i in 0..n {
            w[i][r] = rational::decimal_to_rational(yp[i])? - rational::decimal_to_rational(y[i])?;
        }
    }
    Some(w)
}

fn exact_from_f64(w: &DMatrix<f64>) -> Option<RatMatrix> {
    (0..w.nrows())
        .map(|i| {
            (0..w.ncols())
                .map(|j| rational::decimal_to_rational(w[(i, j)]))
                .collect()
        })
        .collect()
}

/// Basis of `ker W^T` as the rows of an `m x N` matrix.
#[derive(Debug, Clone)]
pub struct ConservationBasis {
    pub q: DMatrix<f64>,
    exact: Option<RatMatrix>,
    pub nonnegative: bool,
}

impl ConservationBasis {
    pub fn m(&self) -> usize {
        self.q.nrows()
    }

    /// Whether the rows were computed in exact rational arithmetic.
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_rows(&self) -> Option<&RatMatrix> {
        self.exact.as_ref()
    }
}

/// Conservation laws of `W`.
///
/// With rational entries the basis is exact: a basis of minimal
/// nonnegative conservation laws when those span the whole kernel,
/// otherwise the reduced row echelon form of the kernel. Entries that are
/// not short decimals fall back to an SVD.
pub fn conservation_basis(w: &DMatrix<f64>) -> ConservationBasis {
    match exact_from_f64(w) {
        Some(exact) => exact_conservation_basis(&exact, w.nrows(), w.ncols()),
        None => float_conservation_basis(w),
    }
}

fn exact_conservation_basis(w: &RatMatrix, n: usize, r: usize) -> ConservationBasis {
    let wt = rational::transpose(w, r);
    let wt = if r == 0 { Vec::new() } else { wt };
    let ker = rational::kernel(&wt, n);
    let m = ker.len();
    let to_f64 = |rows: &RatMatrix| {
        DMatrix::from_fn(rows.len(), n, |i, j| rational::to_f64(&rows[i][j]))
    };
    if m == 0 {
        return ConservationBasis {
            q: DMatrix::zeros(0, n),
            exact: Some(Vec::new()),
            nonnegative: true,
        };
    }
    if let Some(mut flows) = rational::semiflows(w, n, r, SEMIFLOW_LIMIT) {
        flows.sort_by(|a, b| {
            let sa = a.iter().filter(|x| !x.is_zero()).count();
            let sb = b.iter().filter(|x| !x.is_zero()).count();
            sa.cmp(&sb).then_with(|| b.cmp(a))
        });
        let mut chosen: RatMatrix = Vec::new();
        for f in flows {
            chosen.push(f);
            if rational::rank(&chosen) < chosen.len() {
                chosen.pop();
            }
            if chosen.len() == m {
                break;
            }
        }
        if chosen.len() == m {
            return ConservationBasis {
                q: to_f64(&chosen),
                exact: Some(chosen),
                nonnegative: true,
            };
        }
    }
    let mut basis = ker;
    rational::rref(&mut basis);
    let nonnegative = basis.iter().flatten().all(|x| *x >= Rat::zero());
    ConservationBasis {
        q: to_f64(&basis),
        exact: Some(basis),
        nonnegative,
    }
}

/// Left singular vectors of `a` (all `nrows` of them) and the matching
/// singular values, zero-padded.
fn full_left_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let cols = a.ncols().max(n);
    let mut padded = DMatrix::zeros(n, cols);
    padded.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    (u, svd.singular_values.iter().copied().collect())
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > SVD_RANK_TOL * max && s > 0.0).count()
}

/// Floating reduced row echelon form with partial pivoting.
fn float_rref(mut m: DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let (rows, cols) = m.shape();
    let tol = 1e-12 * m.amax().max(1.0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows)
            .map(|i| (i, m[(i, c)].abs()))
            .fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            for i in r..rows {
                m[(i, c)] = 0.0;
            }
            continue;
        }
        m.swap_rows(r, p);
        let piv = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= piv;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        let d = f * m[(r, j)];
                        m[(i, j)] -= d;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m.rows(0, r).into_owned(), pivots)
}

fn float_conservation_basis(w: &DMatrix<f64>) -> ConservationBasis {
    let n = w.nrows();
    let (u, sv) = full_left_svd(w);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let kernel_cols: Vec<usize> = (0..n).filter(|&k| sv[k] <= SVD_RANK_TOL * max).collect();
    let mut basis = DMatrix::zeros(kernel_cols.len(), n);
    for (row, &k) in kernel_cols.iter().enumerate() {
        for i in 0..n {
            basis[(row, i)] = u[(i, k)];
        }
    }
    let (q, _) = float_rref(basis);
    let nonnegative = q.iter().all(|&x| x >= -1e-14);
    ConservationBasis {
        q,
        exact: None,
        nonnegative,
    }
}

/// `M = Q u0_mean`, flagged when some component is not positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mass {
    pub values: Vec<f64>,
    pub nonpositive: bool,
}

/// Whether some conservation law with nonnegative coefficients has a
/// nonpositive value, i.e. the state lies on a face of the orthant.
/// Mixed-sign laws may take any sign in the interior.
pub fn nonpositive_mass(q: &DMatrix<f64>, mass: &[f64]) -> bool {
    (0..q.nrows()).any(|j| !(mass[j] > 0.0) && q.row(j).iter().all(|&x| x >= 0.0))
}

pub fn mass_vector(q: &DMatrix<f64>, u0_mean: &[f64]) -> Result<Mass> {
    if q.ncols() != u0_mean.len() {
        return Err(crate::Error::DimensionMismatch {
            expected: q.ncols(),
            got: u0_mean.len(),
        });
    }
    check_nonnegative(u0_mean)?;
    let values: Vec<f64> = (0..q.nrows())
        .map(|j| (0..q.ncols()).map(|i| q[(j, i)] * u0_mean[i]).sum())
        .collect();
    let nonpositive = nonpositive_mass(q, &values);
    Ok(Mass {
        values,
        nonpositive,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGraph {
    /// Complex indices per linkage class, each sorted, classes ordered by
    /// smallest member.
    pub linkage_classes: Vec<Vec<usize>>,
    pub strong_components: Vec<Vec<usize>>,
    pub weakly_reversible: bool,
}

impl ComplexGraph {
    /// Linkage class of every complex.
    pub fn class_of(&self, n_complexes: usize) -> Vec<usize> {
        let mut out = vec![0; n_complexes];
        for (l, class) in self.linkage_classes.iter().enumerate() {
            for &c in class {
                out[c] = l;
            }
        }
        out
    }
}

fn canonical(mut parts: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    parts.sort_by_key(|p| p[0]);
    parts
}

pub fn complex_graph(net: &ReactionNetwork) -> ComplexGraph {
    let nc = net.complexes().len();
    let mut uf = UnionFind::<usize>::new(nc);
    let mut g = DiGraph::<usize, ()>::with_capacity(nc, net.num_reactions());
    let nodes: Vec<_> = (0..nc).map(|c| g.add_node(c)).collect();
    for r in net.reactions() {
        uf.union(r.reactant_index(), r.product_index());
        g.add_edge(nodes[r.reactant_index()], nodes[r.product_index()], ());
    }
    let labels = uf.into_labeling();
    let mut linkage: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for c in 0..nc {
        match seen.iter().position(|&l| l == labels[c]) {
            Some(k) => linkage[k].push(c),
            None => {
                seen.push(labels[c]);
                linkage.push(vec![c]);
            }
        }
    }
    let strong: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|comp| comp.into_iter().map(|ix| g[ix]).collect())
        .collect();
    let linkage_classes = canonical(linkage);
    let strong_components = canonical(strong);
    let weakly_reversible = linkage_classes.len() == strong_components.len();
    ComplexGraph {
        linkage_classes,
        strong_components,
        weakly_reversible,
    }
}

/// `|C| - #linkage classes - rank W`.
pub fn deficiency(net: &ReactionNetwork, stoich: &StoichData) -> usize {
    let nc = net.complexes().len();
    nc.checked_sub(stoich.graph.linkage_classes.len() + stoich.rank)
        .expect("deficiency is nonnegative")
}

#[derive(Debug, Clone)]
pub struct StoichData {
    pub w: DMatrix<f64>,
    pub basis: ConservationBasis,
    pub rank: usize,
    pub graph: ComplexGraph,
    pub deficiency: usize,
}

impl StoichData {
    pub fn analyze(net: &ReactionNetwork) -> Self {
        let w = wegscheider_matrix(net);
        let (basis, rank) = match exact_wegscheider(net) {
            Some(exact) => {
                let rank = rational::rank(&exact);
                (exact_conservation_basis(&exact, net.num_species(), net.num_reactions()), rank)
            }
            None => (float_conservation_basis(&w), numerical_rank(&w)),
        };
        let graph = complex_graph(net);
        let mut data = Self {
            w,
            basis,
            rank,
            graph,
            deficiency: 0,
        };
        data.deficiency = deficiency(net, &data);
        data
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.basis.q
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn weakly_reversible(&self) -> bool {
        self.graph.weakly_reversible
    }

    /// Reduced row echelon form of `Q` and its pivot columns.
    pub fn q_rref(&self) -> (DMatrix<f64>, Vec<usize>) {
        let n = self.w.nrows();
        match self.basis.exact_rows() {
            Some(rows) => {
                let mut r = rows.clone();
                let pivots = rational::rref(&mut r);
                (DMatrix::from_fn(r.len(), n, |i, j| rational::to_f64(&r[i][j])), pivots)
            }
            None => float_rref(self.basis.q.clone()),
        }
    }

    /// Basis of `ker Q` as the columns of an `N x (N - m)` matrix.
    pub fn kernel_of_q(&self) -> DMatrix<f64> {
        let n = self.w.nrows();
        match self.basis.exact_rows() {
            Some(rows) => {
                let k = rational::kernel(rows, n);
                DMatrix::from_fn(n, k.len(), |i, j| rational::to_f64(&k[j][i]))
            }
            None => {
                if self.m() == 0 {
                    return DMatrix::identity(n, n);
                }
                let qt = self.basis.q.transpose();
                let (u, sv) = full_left_svd(&qt);
                let max = sv.iter().copied().fold(0.0, f64::max);
                let cols: Vec<usize> = (0..n).filter(|&k| sv[k] <= SVD_RANK_TOL * max).collect();
                DMatrix::from_fn(n, cols.len(), |i, j| u[(i, cols[j])])
            }
        }
    }

    pub fn report(&self, net: &ReactionNetwork) -> StoichReport {
        StoichReport {
            species: net.num_species(),
            reactions: net.num_reactions(),
            complexes: net.complexes().len(),
            w_dims: [self.w.nrows(), self.w.ncols()],
            rank: self.rank,
            m: self.m(),
            q_rows: (0..self.m())
                .map(|j| self.basis.q.row(j).iter().copied().collect())
                .collect(),
            q_exact: self.basis.is_exact(),
            q_nonnegative: self.basis.nonnegative,
            linkage_classes: self.graph.linkage_classes.len(),
            strong_components: self.graph.strong_components.len(),
            weakly_reversible: self.weakly_reversible(),
            deficiency: self.deficiency,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StoichReport {
    pub species: usize,
    pub reactions: usize,
    pub complexes: usize,
    pub w_dims: [usize; 2],
    pub rank: usize,
    pub m: usize,
    pub q_rows: Vec<Vec<f64>>,
    pub q_exact: bool,
    pub q_nonnegative: bool,
    pub linkage_classes: usize,
    pub strong_components: usize,
    pub weakly_reversible: bool,
    pub deficiency: usize,
}
