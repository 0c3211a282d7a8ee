//! Anyons of the quantum double `D(G)`: labels `([g], π)` with `π` an irrep
//! of the centralizer of `g`, their dimensions and spins, the S-matrix,
//! Verlinde fusion, and Lagrangian-subgroup checks.

pub mod group;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub use group::{direct_product, make_group, CharacterTable, FiniteGroup, Irrep};

use crate::error::{Error, Result};
use crate::stabilizers::ComplexValue;

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct Anyon {
    /// `[rep]:irrep`, e.g. `[r2]:s1`.
    pub name: String,
    pub class: Vec<String>,
    pub centralizer_order: usize,
    pub irrep: String,
    pub dim: usize,
    pub spin: ComplexValue,
    #[serde(skip)]
    pub class_index: usize,
    #[serde(skip)]
    pub irrep_index: usize,
}

impl Anyon {
    pub fn is_abelian(&self) -> bool {
        self.dim == 1
    }

    pub fn is_boson(&self) -> bool {
        (self.spin.re - 1.0).abs() < TOL && self.spin.im.abs() < TOL
    }
}

#[derive(Clone, Debug)]
pub struct QuantumDouble {
    pub group: FiniteGroup,
    pub classes: Vec<Vec<usize>>,
    /// Character table of the centralizer of each class's smallest element.
    pub centralizers: Vec<CharacterTable>,
    pub anyons: Vec<Anyon>,
    pub s: DMatrix<Complex64>,
    /// `fusion[a][b][c] = N_ab^c`.
    pub fusion: Vec<Vec<Vec<u32>>>,
}

/// Why a set is or is not a Lagrangian subgroup.
#[derive(Clone, Debug, Serialize)]
pub struct LagrangianReport {
    pub members: Vec<String>,
    pub lagrangian: bool,
    pub failures: Vec<String>,
}

impl QuantumDouble {
    pub fn new(group: FiniteGroup) -> Result<Self> {
        let classes = group.conjugacy_classes();
        let mut centralizers = Vec::new();
        let mut anyons = Vec::new();
        for (ci, class) in classes.iter().enumerate() {
            let g = class[0];
            let table = group.character_table(&group.centralizer(g))?;
            for (ii, irrep) in table.irreps.iter().enumerate() {
                let theta = irrep.chi(g) / irrep.dim as f64;
                anyons.push(Anyon {
                    name: format!("[{}]:{}", group.labels[g], irrep.name),
                    class: class.iter().map(|&x| group.labels[x].clone()).collect(),
                    centralizer_order: table.elements.len(),
                    irrep: irrep.name.clone(),
                    dim: class.len() * irrep.dim,
                    spin: ComplexValue { re: theta.re, im: theta.im },
                    class_index: ci,
                    irrep_index: ii,
                });
            }
            centralizers.push(table);
        }
        let mut qd = QuantumDouble { group, classes, centralizers, anyons, s: DMatrix::zeros(0, 0), fusion: Vec::new() };
        qd.s = qd.compute_s();
        qd.fusion = qd.compute_fusion()?;
        Ok(qd)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        QuantumDouble::new(make_group(name)?)
    }

    pub fn len(&self) -> usize {
        self.anyons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anyons.is_empty()
    }

    pub fn find(&self, rep: &str, irrep: &str) -> Option<usize> {
        self.anyons.iter().position(|a| a.name == format!("[{rep}]:{irrep}"))
    }

    pub fn vacuum(&self) -> usize {
        0
    }

    pub fn total_dim_sq(&self) -> usize {
        self.anyons.iter().map(|a| a.dim * a.dim).sum()
    }

    /// `x` with `x · rep · x⁻¹ = g`.
    fn conjugator(&self, class: usize, g: usize) -> usize {
        let rep = self.classes[class][0];
        (0..self.group.order()).find(|&x| self.group.conj(x, rep) == g).expect("g is in the class")
    }

    /// `S_ab = |G|⁻¹ Σ_{g∈A, h∈B, gh=hg} χ_α(x_g⁻¹ h x_g)* χ_β(x_h⁻¹ g x_h)*`.
    fn compute_s(&self) -> DMatrix<Complex64> {
        let n = self.anyons.len();
        let g = &self.group;
        let order = g.order() as f64;
        let mut s = DMatrix::zeros(n, n);
        for (i, a) in self.anyons.iter().enumerate() {
            for (j, b) in self.anyons.iter().enumerate() {
                let (ta, tb) = (&self.centralizers[a.class_index], &self.centralizers[b.class_index]);
                let (ra, rb) = (&ta.irreps[a.irrep_index], &tb.irreps[b.irrep_index]);
                let mut acc = Complex64::new(0.0, 0.0);
                for &x in &self.classes[a.class_index] {
                    for &y in &self.classes[b.class_index] {
                        if g.mul(x, y) != g.mul(y, x) {
                            continue;
                        }
                        let cx = self.conjugator(a.class_index, x);
                        let cy = self.conjugator(b.class_index, y);
                        let in_a = g.conj(g.inv(cx), y);
                        let in_b = g.conj(g.inv(cy), x);
                        acc += ra.chi(in_a).conj() * rb.chi(in_b).conj();
                    }
                }
                s[(i, j)] = acc / order;
            }
        }
        s
    }

    fn compute_fusion(&self) -> Result<Vec<Vec<Vec<u32>>>> {
        let n = self.anyons.len();
        let s = &self.s;
        let mut out = vec![vec![vec![0u32; n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v: Complex64 = (0..n).map(|x| s[(a, x)] * s[(b, x)] * s[(c, x)].conj() / s[(0, x)]).sum();
                    let r = v.re.round();
                    if (v - Complex64::new(r, 0.0)).norm() > TOL || r < 0.0 {
                        return Err(Error::NonIntegerFusion { a, b, c, value: v.re });
                    }
                    out[a][b][c] = r as u32;
                }
            }
        }
        Ok(out)
    }

    /// Fusion outcomes `c` of `a × b` with multiplicities.
    pub fn fuse(&self, a: usize, b: usize) -> Vec<(usize, u32)> {
        self.fusion[a][b].iter().enumerate().filter(|(_, &n)| n > 0).map(|(c, &n)| (c, n)).collect()
    }

    /// `‖S S† − I‖` and `‖S − Sᵀ‖`.
    pub fn s_defects(&self) -> (f64, f64) {
        let n = self.s.nrows();
        let u = &self.s * self.s.adjoint() - DMatrix::identity(n, n);
        let t = &self.s - self.s.transpose();
        (crate::operator::max_abs(&u), crate::operator::max_abs(&t))
    }

    /// `S²` as a permutation (charge conjugation), if it is one.
    pub fn charge_conjugation(&self) -> Option<Vec<usize>> {
        let s2 = &self.s * &self.s;
        let n = s2.nrows();
        let mut perm = Vec::with_capacity(n);
        for i in 0..n {
            let hits: Vec<usize> = (0..n).filter(|&j| (s2[(i, j)] - Complex64::new(1.0, 0.0)).norm() < TOL).collect();
            let zeros = (0..n).filter(|&j| s2[(i, j)].norm() < TOL).count();
            if hits.len() != 1 || zeros != n - 1 {
                return None;
            }
            perm.push(hits[0]);
        }
        Some(perm)
    }

    /// Monodromy scalar `S*_ab S_00 / (S_0a S_0b)`; `1` iff `a` and `b`
    /// braid trivially.
    pub fn monodromy(&self, a: usize, b: usize) -> Complex64 {
        self.s[(a, b)].conj() * self.s[(0, 0)] / (self.s[(0, a)] * self.s[(0, b)])
    }

    pub fn is_lagrangian(&self, subset: &[usize]) -> LagrangianReport {
        let set: BTreeSet<usize> = subset.iter().copied().collect();
        let name = |a: usize| self.anyons[a].name.clone();
        let mut failures = Vec::new();
        for &a in &set {
            if !self.anyons[a].is_abelian() {
                failures.push(format!("{} is not abelian", name(a)));
            }
            if !self.anyons[a].is_boson() {
                failures.push(format!("{} is not a boson", name(a)));
            }
        }
        for &a in &set {
            for &b in &set {
                if a < b && (self.monodromy(a, b) - Complex64::new(1.0, 0.0)).norm() > TOL {
                    failures.push(format!("{} and {} braid nontrivially", name(a), name(b)));
                }
                for (c, _) in self.fuse(a, b) {
                    if !set.contains(&c) {
                        failures.push(format!("{} × {} contains {} outside the set", name(a), name(b), name(c)));
                    }
                }
            }
        }
        for x in 0..self.anyons.len() {
            if !set.contains(&x) && set.iter().all(|&a| (self.monodromy(x, a) - Complex64::new(1.0, 0.0)).norm() <= TOL) {
                failures.push(format!("{} braids trivially with every member", name(x)));
            }
        }
        failures.dedup();
        LagrangianReport { members: set.iter().map(|&a| name(a)).collect(), lagrangian: failures.is_empty(), failures }
    }

    /// Every Lagrangian subgroup made of abelian bosons, by growing
    /// fusion-closed, mutually transparent sets one generator at a time.
    pub fn search_lagrangians(&self) -> Vec<Vec<usize>> {
        let bosons: Vec<usize> = (0..self.anyons.len()).filter(|&a| self.anyons[a].is_abelian() && self.anyons[a].is_boson()).collect();
        let target = self.group.order();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut found = Vec::new();
        let mut stack = vec![vec![self.vacuum()]];
        while let Some(set) = stack.pop() {
            if set.len() == target {
                if self.is_lagrangian(&set).lagrangian {
                    found.push(set);
                }
                continue;
            }
            for &b in &bosons {
                if set.contains(&b) || set.iter().any(|&a| (self.monodromy(a, b) - Complex64::new(1.0, 0.0)).norm() > TOL) {
                    continue;
                }
                let Some(next) = self.closure(&set, b) else { continue };
                if next.len() <= target && seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        found.sort();
        found
    }

    /// Fusion closure of `set ∪ {b}` over abelian bosons; `None` if it leaves them.
    fn closure(&self, set: &[usize], b: usize) -> Option<Vec<usize>> {
        let mut s: BTreeSet<usize> = set.iter().copied().collect();
        s.insert(b);
        loop {
            let mut added = false;
            let cur: Vec<usize> = s.iter().copied().collect();
            for &x in &cur {
                for &y in &cur {
                    for (c, _) in self.fuse(x, y) {
                        if !self.anyons[c].is_abelian() || !self.anyons[c].is_boson() {
                            return None;
                        }
                        added |= s.insert(c);
                    }
                }
            }
            if !added {
                return Some(s.into_iter().collect());
            }
        }
    }

    pub fn summary(&self) -> AnyonSummary {
        let (unitarity, symmetry) = self.s_defects();
        AnyonSummary {
            group: self.group.name.clone(),
            order: self.group.order(),
            n_anyons: self.anyons.len(),
            total_dim_sq: self.total_dim_sq(),
            s_unitarity_defect: unitarity,
            s_symmetry_defect: symmetry,
            anyons: self.anyons.clone(),
            lagrangians: self.search_lagrangians().into_iter().map(|l| self.is_lagrangian(&l)).collect(),
        }
    }
}

/// Everything the `anyons` command reports.
#[derive(Clone, Debug, Serialize)]
pub struct AnyonSummary {
    pub group: String,
    pub order: usize,
    pub n_anyons: usize,
    pub total_dim_sq: usize,
    pub s_unitarity_defect: f64,
    pub s_symmetry_defect: f64,
    pub anyons: Vec<Anyon>,
    pub lagrangians: Vec<LagrangianReport>,
}

/// The eight abelian anyons reached from the bilayer toric code,
/// `{1, e₁e₂, m₁m₂, f₁f₂, s, e₁e₂s, m₁m₂s, f₁f₂s}`, as `D(D4)` labels.
pub fn bilayer_lagrangian(qd: &QuantumDouble) -> Result<Vec<(String, usize)>> {
    let rows = [
        ("1", "1", "1"),
        ("e1e2", "1", "s2"),
        ("m1m2", "r2", "1"),
        ("f1f2", "r2", "s2"),
        ("s", "1", "s3"),
        ("e1e2s", "1", "s1"),
        ("m1m2s", "r2", "s3"),
        ("f1f2s", "r2", "s1"),
    ];
    rows.iter()
        .map(|&(bilayer, class, irrep)| {
            qd.find(class, irrep).map(|a| (bilayer.to_string(), a)).ok_or_else(|| Error::Invalid(format!("no anyon [{class}]:{irrep}")))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub class: String,
    pub irrep: String,
    pub claimed_dim: usize,
    pub found: bool,
    pub dim: usize,
    pub boson: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub kernels_match: bool,
    pub reflection_centralizer_is_klein: bool,
    pub pass: bool,
}

/// Check the bilayer/`D(D4)` correspondence table: each row's anyon exists
/// with the stated dimension (abelian rows must be bosons), the sign irreps
/// have the stated kernels, and `[rs]` has centralizer `Z2²`.
pub fn correspondence_table_check(qd: &QuantumDouble) -> Result<TableReport> {
    let g = &qd.group;
    if g.name != "D4" {
        return Err(Error::UnknownGroup(format!("the correspondence table is for D4, not {}", g.name)));
    }
    let claims = [
        ("1", "1", 1),
        ("1", "s1", 1),
        ("1", "s2", 1),
        ("1", "s3", 1),
        ("r2", "1", 1),
        ("r2", "s1", 1),
        ("r2", "s2", 1),
        ("r2", "s3", 1),
        ("1", "2", 2),
        ("rs", "1", 2),
    ];
    let rows: Vec<TableRow> = claims
        .iter()
        .map(|&(class, irrep, claimed_dim)| {
            let found = qd.find(class, irrep);
            let (dim, boson) = found.map(|a| (qd.anyons[a].dim, qd.anyons[a].is_boson())).unwrap_or((0, false));
            let pass = found.is_some() && dim == claimed_dim && (claimed_dim != 1 || boson);
            TableRow { class: class.into(), irrep: irrep.into(), claimed_dim, found: found.is_some(), dim, boson, pass }
        })
        .collect();
    let irreps = g.irreps()?;
    let kernel = |name: &str| -> BTreeSet<String> {
        let r = irreps.iter().find(|r| r.name == name).expect("named irrep");
        (0..g.order()).filter(|&x| (r.chi(x) - Complex64::new(r.dim as f64, 0.0)).norm() < TOL).map(|x| g.labels[x].clone()).collect()
    };
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>();
    let kernels_match = kernel("s1") == set(&["1", "r", "r2", "r3"])
        && kernel("s2") == set(&["1", "r2", "s", "r2s"])
        && kernel("s3") == set(&["1", "r2", "rs", "r3s"]);
    let rs = g.element("rs").expect("rs");
    let cent = g.centralizer(rs);
    let reflection_centralizer_is_klein = cent.len() == 4 && cent.iter().all(|&x| g.element_order(x) <= 2) && {
        let class = qd.classes.iter().find(|c| c.contains(&rs)).expect("class of rs");
        class.iter().map(|&x| g.labels[x].clone()).collect::<BTreeSet<_>>() == set(&["rs", "r3s"])
    };
    let pass = rows.iter().all(|r| r.pass) && kernels_match && reflection_centralizer_is_klein;
    Ok(TableReport { rows, kernels_match, reflection_centralizer_is_klein, pass })
}
