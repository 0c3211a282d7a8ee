//! Small finite groups given by multiplication tables, and the character
//! tables of the subgroups the quantum double needs.
//!
//! Only two kinds of table are ever built: abelian subgroups (characters are
//! homomorphisms, found by extending along generators) and whole named groups
//! (characters read off explicit representations), combined over direct
//! products. Every table is checked against both orthogonality relations.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const SNAP: f64 = 1e-12;

/// Named irreducible characters of a whole group, per element.
#[derive(Clone, Debug)]
struct NamedIrrep {
    name: String,
    values: Vec<Complex64>,
}

#[derive(Clone, Debug)]
enum Structure {
    /// Characters supplied with the group.
    Named(Vec<NamedIrrep>),
    Abelian,
    /// Element `a * |B| + b` is `(a, b)`.
    Product(Box<FiniteGroup>, Box<FiniteGroup>),
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    pub name: String,
    pub labels: Vec<String>,
    /// `table[a][b]` is the index of `a·b`.
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
    pub inverses: Vec<usize>,
    structure: Structure,
}

/// Irreducible character of a subgroup, as values on its elements
/// (indexed by the ambient group).
#[derive(Clone, Debug, Serialize)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    #[serde(skip)]
    pub values: BTreeMap<usize, Complex64>,
}

impl Irrep {
    pub fn chi(&self, g: usize) -> Complex64 {
        self.values[&g]
    }
}

/// Character table of a subgroup: its classes and irreps.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub elements: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    pub irreps: Vec<Irrep>,
}

impl CharacterTable {
    /// `χ_π(class representative)` for each irrep and class.
    pub fn values(&self) -> Vec<Vec<Complex64>> {
        self.irreps.iter().map(|r| self.classes.iter().map(|c| r.chi(c[0])).collect()).collect()
    }

    /// Largest violation of row and column orthogonality and of `Σ dim² = |H|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let order = self.elements.len() as f64;
        let mut worst: f64 = 0.0;
        for (i, a) in self.irreps.iter().enumerate() {
            for (j, b) in self.irreps.iter().enumerate() {
                let s: Complex64 = self.elements.iter().map(|&g| a.chi(g) * b.chi(g).conj()).sum();
                let want = if i == j { order } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        let v = self.values();
        for (k, ck) in self.classes.iter().enumerate() {
            for l in 0..self.classes.len() {
                let s: Complex64 = v.iter().map(|row| row[k] * row[l].conj()).sum();
                let want = if k == l { order / ck.len() as f64 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        let dims: usize = self.irreps.iter().map(|r| r.dim * r.dim).sum();
        worst.max((dims as f64 - order).abs())
    }
}

fn snap(z: Complex64) -> Complex64 {
    let f = |x: f64| if (x - x.round()).abs() < SNAP { x.round() + 0.0 } else { x };
    Complex64::new(f(z.re), f(z.im))
}

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverses[a]
    }

    /// `x g x⁻¹`.
    pub fn conj(&self, x: usize, g: usize) -> usize {
        self.mul(self.mul(x, g), self.inv(x))
    }

    pub fn element(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn from_table(name: &str, labels: Vec<String>, table: Vec<Vec<usize>>, structure: Structure) -> Result<Self> {
        let n = labels.len();
        let identity = (0..n).find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a)).ok_or_else(|| Error::Invalid(format!("{name} has no identity")))?;
        let inverses = (0..n)
            .map(|a| (0..n).find(|&b| table[a][b] == identity).ok_or_else(|| Error::Invalid(format!("{name}: {} has no inverse", labels[a]))))
            .collect::<Result<Vec<_>>>()?;
        let g = FiniteGroup { name: name.to_string(), labels, table, identity, inverses, structure };
        g.check_axioms()?;
        Ok(g)
    }

    /// Latin-square property, and associativity for orders up to 24.
    pub fn check_axioms(&self) -> Result<()> {
        let n = self.order();
        for a in 0..n {
            let row: BTreeSet<usize> = self.table[a].iter().copied().collect();
            let col: BTreeSet<usize> = (0..n).map(|b| self.table[b][a]).collect();
            if row.len() != n || col.len() != n {
                return Err(Error::Invalid(format!("{}: table is not a Latin square", self.name)));
            }
        }
        if n <= 24 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                            return Err(Error::Invalid(format!("{}: not associative", self.name)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn power(&self, g: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, g))
    }

    pub fn element_order(&self, g: usize) -> usize {
        (1..=self.order()).find(|&k| self.power(g, k) == self.identity).expect("finite group")
    }

    /// Conjugacy classes, each sorted, ordered by smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        self.classes_within(&(0..self.order()).collect::<Vec<_>>())
    }

    fn classes_within(&self, elements: &[usize]) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &g in elements {
            if seen.contains(&g) {
                continue;
            }
            let class: BTreeSet<usize> = elements.iter().map(|&x| self.conj(x, g)).collect();
            seen.extend(class.iter().copied());
            out.push(class.into_iter().collect());
        }
        out
    }

    pub fn centralizer(&self, g: usize) -> Vec<usize> {
        (0..self.order()).filter(|&x| self.mul(x, g) == self.mul(g, x)).collect()
    }

    pub fn is_abelian_set(&self, elements: &[usize]) -> bool {
        elements.iter().all(|&a| elements.iter().all(|&b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Character table of a subgroup that is abelian, the whole group, or a
    /// product of such pieces in a direct-product group.
    pub fn character_table(&self, subgroup: &[usize]) -> Result<CharacterTable> {
        let mut elements = subgroup.to_vec();
        elements.sort_unstable();
        let irreps = self.irreps_of(&elements)?;
        let t = CharacterTable { classes: self.classes_within(&elements), elements, irreps };
        let defect = t.orthogonality_defect();
        if defect > 1e-9 {
            return Err(Error::Invalid(format!("{}: character table fails orthogonality by {defect:e}", self.name)));
        }
        Ok(t)
    }

    fn irreps_of(&self, elements: &[usize]) -> Result<Vec<Irrep>> {
        if self.is_abelian_set(elements) {
            return Ok(self.abelian_irreps(elements));
        }
        match &self.structure {
            Structure::Named(irreps) if elements.len() == self.order() => Ok(irreps
                .iter()
                .map(|r| Irrep {
                    name: r.name.clone(),
                    dim: r.values[self.identity].re.round() as usize,
                    values: elements.iter().map(|&g| (g, r.values[g])).collect(),
                })
                .collect()),
            Structure::Product(a, b) => {
                let nb = b.order();
                let pa: BTreeSet<usize> = elements.iter().map(|&g| g / nb).collect();
                let pb: BTreeSet<usize> = elements.iter().map(|&g| g % nb).collect();
                if pa.len() * pb.len() != elements.len() {
                    return Err(Error::Invalid(format!("{}: subgroup is not a product of factor subgroups", self.name)));
                }
                let ia = a.irreps_of(&pa.into_iter().collect::<Vec<_>>())?;
                let ib = b.irreps_of(&pb.into_iter().collect::<Vec<_>>())?;
                let mut out = Vec::new();
                for ra in &ia {
                    for rb in &ib {
                        let values = elements.iter().map(|&g| (g, snap(ra.chi(g / nb) * rb.chi(g % nb)))).collect();
                        out.push(Irrep { name: product_name(&ra.name, &rb.name), dim: ra.dim * rb.dim, values });
                    }
                }
                Ok(out)
            }
            _ => Err(Error::Invalid(format!("{}: no character table for a non-abelian proper subgroup", self.name))),
        }
    }

    /// Characters of an abelian subgroup, built by adjoining one generator
    /// at a time. The trivial character comes first.
    fn abelian_irreps(&self, elements: &[usize]) -> Vec<Irrep> {
        // Characters of the current subgroup K as maps on its elements.
        let mut span: Vec<usize> = vec![self.identity];
        let mut chars: Vec<(Vec<u32>, BTreeMap<usize, Complex64>)> = vec![(vec![], [(self.identity, Complex64::new(1.0, 0.0))].into())];
        for &g in elements {
            if span.contains(&g) {
                continue;
            }
            // Smallest m with g^m ∈ K.
            let m = (1..).find(|&m| span.contains(&self.power(g, m))).expect("finite");
            let gm = self.power(g, m);
            let mut next_span = Vec::new();
            for j in 0..m {
                let gj = self.power(g, j);
                next_span.extend(span.iter().map(|&k| self.mul(k, gj)));
            }
            let mut next = Vec::new();
            for (label, chi) in &chars {
                let base = chi[&gm].arg();
                for t in 0..m as u32 {
                    let w = Complex64::from_polar(1.0, (base + std::f64::consts::TAU * t as f64) / m as f64);
                    let mut values = BTreeMap::new();
                    for j in 0..m {
                        let wj = snap(w.powu(j as u32));
                        for &k in &span {
                            values.insert(self.mul(k, self.power(g, j)), snap(chi[&k] * wj));
                        }
                    }
                    let mut l = label.clone();
                    l.push(t);
                    next.push((l, values));
                }
            }
            span = next_span;
            chars = next;
        }
        chars
            .into_iter()
            .map(|(label, values)| {
                let name = if label.iter().all(|&t| t == 0) {
                    "1".to_string()
                } else {
                    format!("χ{}", label.iter().map(|t| t.to_string()).collect::<String>())
                };
                Irrep { name, dim: 1, values: elements.iter().map(|&g| (g, values[&g])).collect() }
            })
            .collect()
    }

    /// Irreps of the whole group.
    pub fn irreps(&self) -> Result<Vec<Irrep>> {
        Ok(self.character_table(&(0..self.order()).collect::<Vec<_>>())?.irreps)
    }
}

fn product_name(a: &str, b: &str) -> String {
    match (a, b) {
        ("1", "1") => "1".into(),
        _ => format!("{a}⊗{b}"),
    }
}

fn trace2(m: [[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] + m[1][1]
}

fn mat_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Sign character with the given kernel.
fn sign_irrep(name: &str, labels: &[String], kernel: &[&str]) -> NamedIrrep {
    let values = labels.iter().map(|l| Complex64::new(if kernel.contains(&l.as_str()) { 1.0 } else { -1.0 }, 0.0)).collect();
    NamedIrrep { name: name.into(), values }
}

/// Dihedral group of the square: `r⁴ = s² = (sr)² = 1`, element `r^a s^b`
/// at index `a + 4b`.
pub fn dihedral4() -> Result<FiniteGroup> {
    let label = |a: usize, b: usize| match (a, b) {
        (0, 0) => "1".to_string(),
        (1, 0) => "r".into(),
        (a, 0) => format!("r{a}"),
        (0, 1) => "s".into(),
        (1, 1) => "rs".into(),
        (a, _) => format!("r{a}s"),
    };
    let labels: Vec<String> = (0..8).map(|k| label(k % 4, k / 4)).collect();
    // r^a s^b · r^c s^d = r^{a + (−1)^b c} s^{b+d}.
    let table = (0..8)
        .map(|x| {
            (0..8)
                .map(|y| {
                    let (a, b, c, d) = (x % 4, x / 4, y % 4, y / 4);
                    let e = if b == 0 { (a + c) % 4 } else { (a + 4 - c) % 4 };
                    e + 4 * ((b + d) % 2)
                })
                .collect()
        })
        .collect();
    // The faithful irrep from r = diag(i, −i), s = σ_x.
    let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    let one = Complex64::new(1.0, 0.0);
    let r = [[i, o], [o, -i]];
    let s = [[o, one], [one, o]];
    let mut two = Vec::new();
    for k in 0..8 {
        let rk = (0..k % 4).fold([[one, o], [o, one]], |m, _| mat_mul(m, r));
        let m = if k / 4 == 1 { mat_mul(rk, s) } else { rk };
        two.push(snap(trace2(m)));
    }
    let irreps = vec![
        sign_irrep("1", &labels, &["1", "r", "r2", "r3", "s", "rs", "r2s", "r3s"]),
        sign_irrep("s1", &labels, &["1", "r", "r2", "r3"]),
        sign_irrep("s2", &labels, &["1", "r2", "s", "r2s"]),
        sign_irrep("s3", &labels, &["1", "r2", "rs", "r3s"]),
        NamedIrrep { name: "2".into(), values: two },
    ];
    let g = FiniteGroup::from_table("D4", labels, table, Structure::Named(irreps))?;
    let (r, s) = (g.element("r").unwrap(), g.element("s").unwrap());
    let sr = g.mul(s, r);
    if g.power(r, 4) != g.identity || g.power(s, 2) != g.identity || g.power(sr, 2) != g.identity {
        return Err(Error::Invalid("D4 presentation fails".into()));
    }
    Ok(g)
}

/// Quaternion group `{±1, ±i, ±j, ±k}`.
pub fn quaternion8() -> Result<FiniteGroup> {
    let labels: Vec<String> = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"].iter().map(|s| s.to_string()).collect();
    // Unit k ∈ {1, i, j, k} with sign: index 2k + (sign < 0).
    let unit_mul = |a: usize, b: usize| -> (usize, bool) {
        match (a, b) {
            (0, x) | (x, 0) => (x, false),
            (x, y) if x == y => (0, true),
            (1, 2) => (3, false),
            (2, 3) => (1, false),
            (3, 1) => (2, false),
            (2, 1) => (3, true),
            (3, 2) => (1, true),
            (1, 3) => (2, true),
            _ => unreachable!(),
        }
    };
    let table = (0..8)
        .map(|x| {
            (0..8)
                .map(|y| {
                    let (u, neg) = unit_mul(x / 2, y / 2);
                    2 * u + ((x % 2 + y % 2 + neg as usize) % 2)
                })
                .collect()
        })
        .collect();
    // i ↦ iσ_z, j ↦ iσ_y, k ↦ iσ_x.
    let (o, i, one) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0));
    let units = [[[one, o], [o, one]], [[i, o], [o, -i]], [[o, one], [-one, o]], [[o, i], [i, o]]];
    let two = (0..8).map(|x| snap(trace2(units[x / 2]) * if x % 2 == 1 { -1.0 } else { 1.0 })).collect();
    let irreps = vec![
        sign_irrep("1", &labels, &["1", "-1", "i", "-i", "j", "-j", "k", "-k"]),
        sign_irrep("si", &labels, &["1", "-1", "i", "-i"]),
        sign_irrep("sj", &labels, &["1", "-1", "j", "-j"]),
        sign_irrep("sk", &labels, &["1", "-1", "k", "-k"]),
        NamedIrrep { name: "2".into(), values: two },
    ];
    let g = FiniteGroup::from_table("Q8", labels, table, Structure::Named(irreps))?;
    // The 2-dim matrices must multiply like the table.
    for x in 0..8 {
        for y in 0..8 {
            let sign = |k: usize| if k % 2 == 1 { -one } else { one };
            let m = mat_mul(units[x / 2], units[y / 2]);
            let z = g.mul(x, y);
            let want = units[z / 2];
            for a in 0..2 {
                for b in 0..2 {
                    if (m[a][b] * sign(x) * sign(y) - want[a][b] * sign(z)).norm() > SNAP {
                        return Err(Error::Invalid("Q8 representation is not a homomorphism".into()));
                    }
                }
            }
        }
    }
    Ok(g)
}

/// `Z2^n`, elements as bit masks.
pub fn z2_power(n: usize) -> Result<FiniteGroup> {
    if n == 0 || n > 4 {
        return Err(Error::UnknownGroup(format!("Z2^{n} (need 1 ≤ n ≤ 4)")));
    }
    let m = 1usize << n;
    let labels = (0..m).map(|x| if x == 0 { "1".to_string() } else { format!("{x:0n$b}") }).collect();
    let table = (0..m).map(|x| (0..m).map(|y| x ^ y).collect()).collect();
    FiniteGroup::from_table(&if n == 1 { "Z2".into() } else { format!("Z2^{n}") }, labels, table, Structure::Abelian)
}

pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Result<FiniteGroup> {
    let (na, nb) = (a.order(), b.order());
    let labels = (0..na * nb).map(|x| format!("({},{})", a.labels[x / nb], b.labels[x % nb])).collect();
    let table = (0..na * nb)
        .map(|x| (0..na * nb).map(|y| a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb)).collect())
        .collect();
    FiniteGroup::from_table(&format!("{}x{}", a.name, b.name), labels, table, Structure::Product(Box::new(a.clone()), Box::new(b.clone())))
}

/// `D4`, `Q8`, `Z2`, `Z2^n` (n ≤ 4), or products of these joined by `x`;
/// case-insensitive.
pub fn make_group(name: &str) -> Result<FiniteGroup> {
    let parts: Vec<&str> = name.split(['x', 'X']).map(str::trim).collect();
    if parts.len() > 1 {
        let mut g = make_group(parts[0])?;
        for p in &parts[1..] {
            g = direct_product(&g, &make_group(p)?)?;
        }
        return Ok(g);
    }
    match name.to_ascii_uppercase().as_str() {
        "D4" => dihedral4(),
        "Q8" => quaternion8(),
        "Z2" => z2_power(1),
        upper => match upper.strip_prefix("Z2^").map(str::parse::<usize>) {
            Some(Ok(n)) => z2_power(n),
            _ => Err(Error::UnknownGroup(name.to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d4_structure() {
        let g = make_group("D4").unwrap();
        assert_eq!(g.order(), 8);
        let classes: Vec<Vec<&str>> = g.conjugacy_classes().iter().map(|c| c.iter().map(|&x| g.labels[x].as_str()).collect()).collect();
        assert_eq!(classes, vec![vec!["1"], vec!["r", "r3"], vec!["r2"], vec!["s", "r2s"], vec!["rs", "r3s"]]);
        let irreps = g.irreps().unwrap();
        assert_eq!(irreps.iter().map(|r| r.dim).collect::<Vec<_>>(), vec![1, 1, 1, 1, 2]);
        let two = &irreps[4];
        assert_eq!(two.chi(g.element("r2").unwrap()), Complex64::new(-2.0, 0.0));
        assert_eq!(two.chi(g.element("rs").unwrap()), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn q8_structure() {
        let g = make_group("Q8").unwrap();
        assert_eq!(g.conjugacy_classes().len(), 5);
        let i = g.element("i").unwrap();
        let j = g.element("j").unwrap();
        assert_eq!(g.labels[g.mul(i, j)], "k");
        assert_eq!(g.labels[g.mul(j, i)], "-k");
        assert_eq!(g.element_order(i), 4);
        assert_eq!(g.irreps().unwrap().iter().map(|r| r.dim).collect::<Vec<_>>(), vec![1, 1, 1, 1, 2]);
        // Centralizer of i is Z4.
        let c = g.centralizer(i);
        assert_eq!(c.len(), 4);
        let t = g.character_table(&c).unwrap();
        assert!(t.irreps.iter().any(|r| (r.chi(i) - Complex64::new(0.0, 1.0)).norm() < 1e-12));
    }

    #[test]
    fn abelian_and_product_tables() {
        let z = make_group("Z2^2").unwrap();
        let t = z.character_table(&[0, 1, 2, 3]).unwrap();
        assert_eq!((t.classes.len(), t.irreps.len()), (4, 4));
        assert_eq!(t.irreps[0].name, "1");
        let p = make_group("D4xZ2").unwrap();
        assert_eq!(p.order(), 16);
        let t = p.character_table(&(0..16).collect::<Vec<_>>()).unwrap();
        assert_eq!(t.irreps.len(), 10);
        // Centralizer of (r, 1) is Z4 × Z2; of (r2, 1) the whole group.
        let r = p.element("(r,1)").unwrap();
        assert_eq!(p.character_table(&p.centralizer(r)).unwrap().irreps.len(), 8);
        assert!(make_group("S3").is_err());
        assert!(matches!(make_group("Z2^5"), Err(Error::UnknownGroup(_))));
    }

    #[test]
    fn broken_table_is_rejected() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let table = vec![vec![0, 1], vec![1, 1]];
        assert!(FiniteGroup::from_table("bad", labels, table, Structure::Abelian).is_err());
    }
}
