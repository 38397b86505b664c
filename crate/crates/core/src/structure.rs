//! Exact combinatorial structure of a joint pmf: minimal sufficient
//! statistics, the Gács–Körner common function and the double-Markov
//! decomposition.

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::prob::{entropy_bits, FiniteAlphabet, JointPmf, Side, TensorPmf, IDENTITY_TOL};

/// Entrywise tolerance when comparing conditional distributions.
pub const CONDITIONAL_EQ_TOL: f64 = 1e-9;

/// A function from one alphabet onto class ids `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    source: FiniteAlphabet,
    class_of: Vec<usize>,
    num_classes: usize,
    zero_mass: Vec<usize>,
}

impl Labeling {
    /// Relabels `raw` ids by first appearance so they become `0..k`.
    pub fn new(source: FiniteAlphabet, raw: &[usize]) -> Result<Self> {
        if raw.len() != source.len() {
            return Err(Error::InvalidConfig(format!(
                "labeling has {} entries for an alphabet of {}",
                raw.len(),
                source.len()
            )));
        }
        let (class_of, num_classes) = canonical_labels(raw);
        Ok(Self {
            source,
            class_of,
            num_classes,
            zero_mass: Vec::new(),
        })
    }

    pub fn identity(source: FiniteAlphabet) -> Self {
        let n = source.len();
        Self {
            source,
            class_of: (0..n).collect(),
            num_classes: n,
            zero_mass: Vec::new(),
        }
    }

    pub fn constant(source: FiniteAlphabet) -> Self {
        let n = source.len();
        Self {
            source,
            class_of: vec![0; n],
            num_classes: 1,
            zero_mass: Vec::new(),
        }
    }

    pub fn source(&self) -> &FiniteAlphabet {
        &self.source
    }

    pub fn class(&self, symbol: usize) -> usize {
        self.class_of[symbol]
    }

    pub fn classes(&self) -> &[usize] {
        &self.class_of
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Symbols that carry no probability mass; each sits in its own class.
    pub fn zero_mass(&self) -> &[usize] {
        &self.zero_mass
    }

    /// Mass of every class under the given marginal on the source alphabet.
    pub fn class_masses(&self, marginal: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.num_classes];
        for (s, &v) in marginal.iter().enumerate() {
            m[self.class_of[s]] += v;
        }
        m
    }

    pub fn entropy(&self, marginal: &[f64]) -> f64 {
        entropy_bits(&self.class_masses(marginal))
    }

    /// True when this labeling is a function of `finer`.
    pub fn is_function_of(&self, finer: &Labeling) -> bool {
        let mut image = vec![None; finer.num_classes];
        for (s, &c) in finer.class_of.iter().enumerate() {
            match image[c] {
                None => image[c] = Some(self.class_of[s]),
                Some(v) if v != self.class_of[s] => return false,
                _ => {}
            }
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        self.num_classes == self.class_of.len()
    }
}

impl Serialize for Labeling {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Classes<'a>(&'a Labeling);
        impl Serialize for Classes<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.class_of.len()))?;
                for (s, c) in self.0.source.symbols().iter().zip(&self.0.class_of) {
                    map.serialize_entry(s, c)?;
                }
                map.end()
            }
        }
        let zero: Vec<&str> = self.zero_mass.iter().map(|&i| self.source.symbol(i)).collect();
        let fields = if zero.is_empty() { 1 } else { 2 };
        let mut st = serializer.serialize_struct("Labeling", fields)?;
        st.serialize_field("classes", &Classes(self))?;
        if !zero.is_empty() {
            st.serialize_field("zero_mass", &zero)?;
        }
        st.end()
    }
}

fn canonical_labels(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut seen: Vec<usize> = Vec::new();
    let out = raw
        .iter()
        .map(|r| match seen.iter().position(|s| s == r) {
            Some(i) => i,
            None => {
                seen.push(*r);
                seen.len() - 1
            }
        })
        .collect();
    (out, seen.len())
}

fn rows_close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= CONDITIONAL_EQ_TOL)
}

/// Groups rows by entrywise-equal conditional distributions. Rows with zero
/// mass each get a dedicated class after the positive-mass classes.
fn group_conditionals(rows: &[Vec<f64>], masses: &[f64]) -> (Vec<usize>, usize, Vec<usize>) {
    let mut reps: Vec<usize> = Vec::new();
    let mut class_of = vec![usize::MAX; rows.len()];
    for (i, row) in rows.iter().enumerate() {
        if masses[i] <= 0.0 {
            continue;
        }
        match reps.iter().position(|&r| rows_close(&rows[r], row)) {
            Some(c) => class_of[i] = c,
            None => {
                class_of[i] = reps.len();
                reps.push(i);
            }
        }
    }
    let mut next = reps.len();
    let mut zero = Vec::new();
    for (i, c) in class_of.iter_mut().enumerate() {
        if *c == usize::MAX {
            *c = next;
            next += 1;
            zero.push(i);
        }
    }
    (class_of, next, zero)
}

/// Coarsest labeling of `side` that keeps the conditional law of the other side.
pub fn minimal_sufficient_statistic(pmf: &JointPmf, side: Side) -> Result<Labeling> {
    let marginal = pmf.marginal(side);
    if marginal.iter().all(|&m| m <= 0.0) {
        return Err(Error::DegenerateMarginal(match side {
            Side::X => "X",
            Side::Y => "Y",
        }));
    }
    let other = pmf.size(side.other());
    let rows: Vec<Vec<f64>> = (0..pmf.size(side))
        .map(|a| {
            (0..other)
                .map(|b| {
                    if marginal[a] > 0.0 {
                        pmf.get_oriented(side, a, b) / marginal[a]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let (class_of, num_classes, zero_mass) = group_conditionals(&rows, &marginal);
    Ok(Labeling {
        source: pmf.alphabet(side).clone(),
        class_of,
        num_classes,
        zero_mass,
    })
}

/// Merges the symbols of `side` according to `labeling`.
pub fn collapse(pmf: &JointPmf, side: Side, labeling: &Labeling) -> Result<JointPmf> {
    let k = labeling.num_classes();
    let other = pmf.size(side.other());
    let mut merged = vec![vec![0.0; other]; k];
    for a in 0..pmf.size(side) {
        for (b, cell) in merged[labeling.class(a)].iter_mut().enumerate() {
            *cell += pmf.get_oriented(side, a, b);
        }
    }
    let labels: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let other_labels = pmf.alphabet(side.other()).symbols().to_vec();
    let collapsed = JointPmf::validate(&merged, Some(labels), Some(other_labels))?;
    Ok(match side {
        Side::X => collapsed,
        Side::Y => collapsed.transposed(),
    })
}

/// Gács–Körner common function as a pair of labelings with shared class ids.
#[derive(Debug, Clone, Serialize)]
pub struct GkCommonFunction {
    pub x: Labeling,
    pub y: Labeling,
    pub num_components: usize,
    pub component_masses: Vec<f64>,
    pub entropy: f64,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of a bipartite support graph. Returns component ids
/// for left and right nodes (`None` for zero-mass nodes) and the count.
fn bipartite_components(
    left: usize,
    right: usize,
    mass: impl Fn(usize, usize) -> f64,
) -> (Vec<Option<usize>>, Vec<Option<usize>>, usize) {
    let mut ds = DisjointSet::new(left + right);
    let mut live = vec![false; left + right];
    for a in 0..left {
        for b in 0..right {
            if mass(a, b) > 0.0 {
                ds.union(a, left + b);
                live[a] = true;
                live[left + b] = true;
            }
        }
    }
    let mut ids: Vec<Option<usize>> = vec![None; left + right];
    let mut root_id: Vec<Option<usize>> = vec![None; left + right];
    let mut count = 0;
    for node in 0..left + right {
        if !live[node] {
            continue;
        }
        let r = ds.find(node);
        let id = *root_id[r].get_or_insert_with(|| {
            count += 1;
            count - 1
        });
        ids[node] = Some(id);
    }
    let right_ids = ids.split_off(left);
    (ids, right_ids, count)
}

fn finish_labels(ids: &[Option<usize>], first_free: usize) -> (Vec<usize>, usize, Vec<usize>) {
    let mut next = first_free;
    let mut zero = Vec::new();
    let class_of = ids
        .iter()
        .enumerate()
        .map(|(i, c)| match c {
            Some(c) => *c,
            None => {
                zero.push(i);
                next += 1;
                next - 1
            }
        })
        .collect();
    (class_of, next, zero)
}

pub fn gk_common_function(pmf: &JointPmf) -> GkCommonFunction {
    let (xs, ys, count) = bipartite_components(pmf.nx(), pmf.ny(), |x, y| pmf.get(x, y));
    let (cx, nx, zx) = finish_labels(&xs, count);
    let (cy, ny, zy) = finish_labels(&ys, count);
    let x = Labeling {
        source: pmf.alphabet_x().clone(),
        class_of: cx,
        num_classes: nx,
        zero_mass: zx,
    };
    let y = Labeling {
        source: pmf.alphabet_y().clone(),
        class_of: cy,
        num_classes: ny,
        zero_mass: zy,
    };
    let mut component_masses = x.class_masses(&pmf.marginal_x());
    component_masses.truncate(count);
    let entropy = entropy_bits(&component_masses);
    GkCommonFunction {
        x,
        y,
        num_components: count,
        component_masses,
        entropy,
    }
}

/// H(mcf(X, Y)) in bits.
pub fn gk_ci(pmf: &JointPmf) -> f64 {
    gk_common_function(pmf).entropy
}

/// Labelings `f` on U and `g` on X with `f(U) = g(X)` almost surely and
/// `X −◦− g(X) −◦− Y`.
#[derive(Debug, Clone, Serialize)]
pub struct DoubleMarkov {
    pub f: Labeling,
    pub g: Labeling,
    /// Pr[f(U) ≠ g(X)].
    pub mismatch: f64,
    /// I(X ∧ Y | g(X)).
    pub residual: f64,
}

/// Extracts the common part of `U` and `X` when both `U −◦− X −◦− Y` and
/// `X −◦− U −◦− Y` hold. `axes` names the (U, X, Y) axes of `t`.
///
/// Components of the (U, X) support graph share one conditional law of Y;
/// components with equal laws are then merged.
pub fn double_markov_extract(t: &TensorPmf, axes: [&str; 3]) -> Result<DoubleMarkov> {
    let [u, x, y] = axes;
    let r1 = t.conditional_mutual_information(&[u], &[y], &[x])?;
    if r1 > IDENTITY_TOL {
        return Err(Error::MarkovViolation {
            chain: "U - X - Y",
            residual: r1,
        });
    }
    let r2 = t.conditional_mutual_information(&[x], &[y], &[u])?;
    if r2 > IDENTITY_TOL {
        return Err(Error::MarkovViolation {
            chain: "X - U - Y",
            residual: r2,
        });
    }
    let (iu, ix, iy) = (t.axis_index(u)?, t.axis_index(x)?, t.axis_index(y)?);
    let (nu, nx, ny) = (t.dims()[iu], t.dims()[ix], t.dims()[iy]);
    let pux = t.marginal_by_index(&[iu, ix]);
    let pxy = t.marginal_by_index(&[ix, iy]);

    let (us, xs, count) = bipartite_components(nu, nx, |a, b| pux[a * nx + b]);
    // Conditional law of Y given each component.
    let mut laws = vec![vec![0.0; ny]; count];
    let mut masses = vec![0.0; count];
    for (xi, c) in xs.iter().enumerate() {
        if let Some(c) = *c {
            for yi in 0..ny {
                laws[c][yi] += pxy[xi * ny + yi];
                masses[c] += pxy[xi * ny + yi];
            }
        }
    }
    for (law, &m) in laws.iter_mut().zip(&masses) {
        law.iter_mut().for_each(|v| *v /= m);
    }
    let (merged, classes, _) = group_conditionals(&laws, &masses);
    let lift = |ids: &[Option<usize>]| -> Vec<Option<usize>> { ids.iter().map(|c| c.map(|c| merged[c])).collect() };
    let (fu, nfu, zu) = finish_labels(&lift(&us), classes);
    let (gx, ngx, zx) = finish_labels(&lift(&xs), classes);

    let f = Labeling {
        source: t.axes()[iu].alphabet.clone(),
        class_of: fu,
        num_classes: nfu,
        zero_mass: zu,
    };
    let g = Labeling {
        source: t.axes()[ix].alphabet.clone(),
        class_of: gx,
        num_classes: ngx,
        zero_mass: zx,
    };

    let mismatch: f64 = (0..nu)
        .flat_map(|a| (0..nx).map(move |b| (a, b)))
        .filter(|&(a, b)| f.class(a) != g.class(b))
        .map(|(a, b)| pux[a * nx + b])
        .sum();
    let lifted = t.extend_fn("__g", FiniteAlphabet::indexed("g", g.num_classes()), |idx| {
        g.class(idx[ix])
    })?;
    let residual = lifted.conditional_mutual_information(&[x], &[y], &["__g"])?;
    if mismatch > IDENTITY_TOL || residual > 1e-6 {
        return Err(Error::ExtractionFailure(format!(
            "mismatch {mismatch:e}, residual {residual:e}"
        )));
    }
    Ok(DoubleMarkov {
        f,
        g,
        mismatch,
        residual,
    })
}

/// Noninteractive communication rate `min{H(g1*(X)), H(g2*(Y))} − I(X ∧ Y)`.
#[derive(Debug, Clone, Serialize)]
pub struct NonInteractiveRate {
    pub h_g1: f64,
    pub h_g2: f64,
    pub mi: f64,
    pub r_ni: f64,
}

pub fn noninteractive_rate(pmf: &JointPmf) -> Result<NonInteractiveRate> {
    let g1 = minimal_sufficient_statistic(pmf, Side::X)?;
    let g2 = minimal_sufficient_statistic(pmf, Side::Y)?;
    let h_g1 = g1.entropy(&pmf.marginal_x());
    let h_g2 = g2.entropy(&pmf.marginal_y());
    let mi = pmf.mutual_information();
    Ok(NonInteractiveRate {
        h_g1,
        h_g2,
        mi,
        r_ni: (h_g1.min(h_g2) - mi).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{bss, gain_example};
    use approx::assert_abs_diff_eq;

    fn pmf(rows: &[Vec<f64>]) -> JointPmf {
        JointPmf::from_rows(rows).unwrap()
    }

    #[test]
    fn mss_of_independent_pmf_is_constant() {
        let g = minimal_sufficient_statistic(&pmf(&[vec![0.25, 0.25], vec![0.25, 0.25]]), Side::X).unwrap();
        assert_eq!(g.num_classes(), 1);
    }

    #[test]
    fn mss_of_gain_example_is_identity() {
        let p = gain_example(0.1, 0.15, 0.15).unwrap();
        let g1 = minimal_sufficient_statistic(&p, Side::X).unwrap();
        let g2 = minimal_sufficient_statistic(&p, Side::Y).unwrap();
        assert_eq!(g1.classes(), [0, 1, 2]);
        assert_eq!(g2.classes(), [0, 1, 2]);
    }

    #[test]
    fn mss_merges_proportional_rows() {
        let g = minimal_sufficient_statistic(&pmf(&[vec![0.2, 0.2], vec![0.2, 0.2], vec![0.1, 0.1]]), Side::X).unwrap();
        assert_eq!(g.classes(), [0, 0, 0]);
    }

    #[test]
    fn mss_flags_zero_mass_symbols() {
        let g = minimal_sufficient_statistic(&pmf(&[vec![0.3, 0.2], vec![0.0, 0.0], vec![0.3, 0.2]]), Side::X).unwrap();
        assert_eq!(g.classes(), [0, 1, 0]);
        assert_eq!(g.zero_mass(), [1]);
    }

    #[test]
    fn gk_examples() {
        let blocks = gk_common_function(&pmf(&[vec![0.5, 0.0], vec![0.0, 0.5]]));
        assert_eq!(blocks.num_components, 2);
        assert_abs_diff_eq!(blocks.entropy, 1.0, epsilon = 1e-12);

        assert_eq!(gk_ci(&pmf(&[vec![0.1, 0.2], vec![0.3, 0.4]])), 0.0);

        let g = gk_common_function(&pmf(&[vec![0.3, 0.2, 0.0], vec![0.0, 0.0, 0.5]]));
        assert_eq!(g.x.classes(), [0, 1]);
        assert_eq!(g.y.classes(), [0, 0, 1]);
        assert_abs_diff_eq!(g.entropy, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn double_markov_for_copy_is_mss() {
        let p = pmf(&[vec![0.2, 0.2], vec![0.2, 0.2], vec![0.1, 0.1]]);
        let t = TensorPmf::from_joint(&p)
            .extend_fn("U", p.alphabet_x().clone(), |i| i[0])
            .unwrap();
        let dm = double_markov_extract(&t, ["U", "X", "Y"]).unwrap();
        let g1 = minimal_sufficient_statistic(&p, Side::X).unwrap();
        assert_eq!(dm.g.classes(), g1.classes());
        assert_eq!(dm.f.classes(), g1.classes());
    }

    #[test]
    fn double_markov_for_independent_aux_is_constant() {
        let p = pmf(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
        let t = TensorPmf::from_joint(&p)
            .extend_with("U", FiniteAlphabet::indexed("u", 3), |_, row| {
                row.copy_from_slice(&[0.2, 0.3, 0.5])
            })
            .unwrap();
        let dm = double_markov_extract(&t, ["U", "X", "Y"]).unwrap();
        assert_eq!(dm.f.num_classes(), 1);
        assert_eq!(dm.g.num_classes(), 1);
    }

    #[test]
    fn double_markov_for_sufficient_statistic() {
        // Split the gain example's first row so g1* has a nontrivial class.
        let base = gain_example(0.1, 0.15, 0.15).unwrap();
        let mut rows = base.rows();
        let r0: Vec<f64> = rows[0].iter().map(|v| v * 0.5).collect();
        rows[0] = r0.clone();
        rows.push(r0);
        let p = pmf(&rows);
        let g1 = minimal_sufficient_statistic(&p, Side::X).unwrap();
        assert_eq!(g1.num_classes(), 3);
        let t = TensorPmf::from_joint(&p)
            .extend_fn("U", FiniteAlphabet::indexed("u", 3), |i| g1.class(i[0]))
            .unwrap();
        let dm = double_markov_extract(&t, ["U", "X", "Y"]).unwrap();
        assert_eq!(dm.g.classes(), g1.classes());
        assert_eq!(dm.f.classes(), [0, 1, 2]);
        assert_eq!(dm.mismatch, 0.0);
        assert!(dm.residual <= 1e-9);
    }

    #[test]
    fn double_markov_rejects_violations() {
        let p = bss(0.25).unwrap();
        // U independent noise correlated with Y only: U - X - Y fails.
        let t = TensorPmf::from_joint(&p)
            .extend_fn("U", FiniteAlphabet::indexed("u", 2), |i| i[1])
            .unwrap();
        assert!(matches!(
            double_markov_extract(&t, ["U", "X", "Y"]),
            Err(Error::MarkovViolation { .. })
        ));
    }

    #[test]
    fn noninteractive_rate_examples() {
        let r = noninteractive_rate(&bss(0.25).unwrap()).unwrap();
        assert_abs_diff_eq!(r.r_ni, 0.811278, epsilon = 1e-6);
        let copy = noninteractive_rate(&pmf(&[vec![0.5, 0.0], vec![0.0, 0.5]])).unwrap();
        assert_abs_diff_eq!(copy.r_ni, 0.0, epsilon = 1e-12);
        let gain = noninteractive_rate(&gain_example(0.1, 0.15, 0.15).unwrap()).unwrap();
        let hx = entropy_bits(&[0.3, 0.35, 0.35]);
        assert_abs_diff_eq!(hx, 1.5813, epsilon = 1e-4);
        assert_abs_diff_eq!(gain.h_g1, hx, epsilon = 1e-12);
        assert_abs_diff_eq!(gain.r_ni, hx - gain.mi, epsilon = 1e-12);
    }

    #[test]
    fn labeling_serializes_as_class_map() {
        let g = Labeling::new(FiniteAlphabet::indexed("x", 3), &[5, 5, 2]).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"classes":{"x0":0,"x1":0,"x2":1}}"#);
    }
}
