//! Discrete Kakeya sets: subsets of a finite group containing a left coset
//! of every cyclic subgroup, and exact minimization of their size.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KakeyaError, Result};
use crate::par::{self, Execution};

pub const MAX_TABLE_ORDER: usize = 4096;
pub const FULL_ASSOCIATIVITY_ORDER: usize = 64;
pub const ASSOCIATIVITY_SAMPLES: usize = 100_000;
pub const ORACLE_MAX_ORDER: usize = 24;
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(60);
/// Cap on distinct optimal unions collected for the lexicographic
/// tie-break.
const MAX_OPTIMA: usize = 200_000;
const GENERATOR_SEARCH_LIMIT: u64 = 200_000;

/// Recipe for a finite group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupSpec {
    Cyclic { m: usize },
    Product { factors: Vec<GroupSpec> },
    /// Symmetries of the regular `m`-gon, order `2m`.
    Dihedral { m: usize },
    /// Order `4m`; `m = 2` is the quaternion group.
    Dicyclic { m: usize },
    Symmetric { n: usize },
    Alternating { n: usize },
    /// Upper unitriangular 3×3 matrices over `Z_p`.
    Unitriangular { p: usize },
    Table {
        table: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic { m } => write!(f, "Z{m}"),
            GroupSpec::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(|g| g.to_string()).collect();
                write!(f, "{}", parts.join("x"))
            }
            GroupSpec::Dihedral { m } => write!(f, "D{m}"),
            GroupSpec::Dicyclic { m: 2 } => write!(f, "Q8"),
            GroupSpec::Dicyclic { m } => write!(f, "Dic{m}"),
            GroupSpec::Symmetric { n } => write!(f, "S{n}"),
            GroupSpec::Alternating { n } => write!(f, "A{n}"),
            GroupSpec::Unitriangular { p } => write!(f, "UT({p})"),
            GroupSpec::Table { name, table, .. } => {
                write!(f, "{}", name.clone().unwrap_or_else(|| format!("Table{}", table.len())))
            }
        }
    }
}

impl GroupSpec {
    /// Parses names like `Z5`, `Z3xZ3`, `Z2^3`, `D4`, `Q8`, `Dic3`, `S3`,
    /// `A4`, `UT(3)`.
    pub fn parse(name: &str) -> Result<GroupSpec> {
        let bad = || KakeyaError::InvalidGroup(format!("unknown group '{name}'"));
        let parts: Vec<&str> = name.split(['x', '×', '*']).map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(bad());
        }
        let mut factors = Vec::new();
        for part in parts {
            let (base, power) = match part.split_once('^') {
                Some((b, e)) => (b, e.parse::<usize>().map_err(|_| bad())?),
                None => (part, 1),
            };
            if power == 0 {
                return Err(bad());
            }
            let one = Self::parse_atom(base).ok_or_else(bad)?;
            factors.extend(std::iter::repeat_n(one, power));
        }
        Ok(if factors.len() == 1 { factors.pop().expect("one factor") } else { GroupSpec::Product { factors } })
    }

    fn parse_atom(s: &str) -> Option<GroupSpec> {
        let num = |t: &str| t.trim_matches(|c| c == '(' || c == ')').parse::<usize>().ok().filter(|&n| n > 0);
        let upper = s.to_ascii_uppercase();
        if upper == "Q8" {
            return Some(GroupSpec::Dicyclic { m: 2 });
        }
        if let Some(r) = upper.strip_prefix("DIC") {
            return num(r).map(|m| GroupSpec::Dicyclic { m });
        }
        if let Some(r) = upper.strip_prefix("UT").or_else(|| upper.strip_prefix("HEIS")) {
            return num(r).map(|p| GroupSpec::Unitriangular { p });
        }
        let (head, rest) = upper.split_at(1);
        let n = num(rest)?;
        match head {
            "Z" | "C" => Some(GroupSpec::Cyclic { m: n }),
            "D" => Some(GroupSpec::Dihedral { m: n }),
            "S" => Some(GroupSpec::Symmetric { n }),
            "A" => Some(GroupSpec::Alternating { n }),
            _ => None,
        }
    }
}

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteGroup {
    pub name: String,
    pub order: usize,
    /// Row-major: `table[a * order + b] = a·b`.
    pub table: Vec<u32>,
    pub identity: usize,
    pub labels: Vec<String>,
    pub inverses: Vec<usize>,
    /// Size of a smallest generating set, when determined.
    pub generators: Option<usize>,
}

impl FiniteGroup {
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    pub fn exponent(&self) -> usize {
        (0..self.order).map(|g| self.element_order(g)).fold(1, lcm)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Subgroup generated by `gens`, as a bitset.
    pub fn closure(&self, gens: &[usize]) -> FixedBitSet {
        let mut seen = FixedBitSet::with_capacity(self.order);
        seen.insert(self.identity);
        let mut stack = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen.contains(y) {
                    seen.insert(y);
                    stack.push(y);
                }
            }
        }
        seen
    }

    fn from_table(name: String, order: usize, table: Vec<u32>, labels: Vec<String>) -> Result<FiniteGroup> {
        if order == 0 || order > MAX_TABLE_ORDER {
            return Err(KakeyaError::InvalidGroup(format!("order {order} outside 1..={MAX_TABLE_ORDER}")));
        }
        if table.len() != order * order || labels.len() != order {
            return Err(KakeyaError::InvalidGroup("table shape does not match order".into()));
        }
        if table.iter().any(|&x| x as usize >= order) {
            return Err(KakeyaError::InvalidGroup("table entry out of range".into()));
        }
        // Latin square
        for i in 0..order {
            let mut row = FixedBitSet::with_capacity(order);
            let mut col = FixedBitSet::with_capacity(order);
            for j in 0..order {
                row.insert(table[i * order + j] as usize);
                col.insert(table[j * order + i] as usize);
            }
            if row.count_ones(..) != order || col.count_ones(..) != order {
                return Err(KakeyaError::InvalidGroup(format!("row or column {i} repeats an element")));
            }
        }
        let at = |a: usize, b: usize| table[a * order + b] as usize;
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| at(e, g) == g && at(g, e) == g))
            .ok_or_else(|| KakeyaError::InvalidGroup("no identity element".into()))?;
        let inverses: Vec<usize> = (0..order)
            .map(|g| (0..order).find(|&h| at(g, h) == identity).expect("Latin square row contains identity"))
            .collect();
        let assoc = |a: usize, b: usize, c: usize| at(at(a, b), c) == at(a, at(b, c));
        if order <= FULL_ASSOCIATIVITY_ORDER {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if !assoc(a, b, c) {
                            return Err(KakeyaError::InvalidGroup(format!("not associative at ({a},{b},{c})")));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(order as u64);
            for _ in 0..ASSOCIATIVITY_SAMPLES {
                let (a, b, c) = (rng.random_range(0..order), rng.random_range(0..order), rng.random_range(0..order));
                if !assoc(a, b, c) {
                    return Err(KakeyaError::InvalidGroup(format!("not associative at ({a},{b},{c})")));
                }
            }
        }
        Ok(FiniteGroup { name, order, table, identity, labels, inverses, generators: None })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Element set and product law of a spec before table construction.
struct Law {
    labels: Vec<String>,
    mul: Box<dyn Fn(usize, usize) -> usize>,
}

fn law(spec: &GroupSpec) -> Result<Law> {
    let too_big = |n: usize| KakeyaError::InvalidGroup(format!("order {n} exceeds {MAX_TABLE_ORDER}"));
    let positive = |n: usize, what: &str| {
        if n == 0 {
            Err(KakeyaError::InvalidGroup(format!("{what} must be positive")))
        } else {
            Ok(())
        }
    };
    Ok(match spec {
        GroupSpec::Cyclic { m } => {
            let m = *m;
            positive(m, "cyclic order")?;
            if m > MAX_TABLE_ORDER {
                return Err(too_big(m));
            }
            Law { labels: (0..m).map(|k| k.to_string()).collect(), mul: Box::new(move |a, b| (a + b) % m) }
        }
        GroupSpec::Dihedral { m } => {
            let m = *m;
            positive(m, "dihedral parameter")?;
            if 2 * m > MAX_TABLE_ORDER {
                return Err(too_big(2 * m));
            }
            // index k + m·e stands for r^k s^e
            let labels = (0..2 * m)
                .map(|i| match (i % m, i / m) {
                    (0, 0) => "e".to_string(),
                    (k, 0) => format!("r^{k}"),
                    (0, _) => "s".to_string(),
                    (k, _) => format!("r^{k}s"),
                })
                .collect();
            Law {
                labels,
                mul: Box::new(move |a, b| {
                    let (k, e) = (a % m, a / m);
                    let (l, f) = (b % m, b / m);
                    let r = if e == 0 { (k + l) % m } else { (k + m - l) % m };
                    r + m * ((e + f) % 2)
                }),
            }
        }
        GroupSpec::Dicyclic { m } => {
            let m = *m;
            if m < 2 {
                return Err(KakeyaError::InvalidGroup("dicyclic parameter must be at least 2".into()));
            }
            if 4 * m > MAX_TABLE_ORDER {
                return Err(too_big(4 * m));
            }
            let n = 2 * m;
            // index k + n·e stands for a^k x^e with a^{2m} = 1, x² = a^m,
            // x a x⁻¹ = a⁻¹
            let labels = (0..2 * n)
                .map(|i| match (i % n, i / n) {
                    (0, 0) => "e".to_string(),
                    (k, 0) => format!("a^{k}"),
                    (0, _) => "x".to_string(),
                    (k, _) => format!("a^{k}x"),
                })
                .collect();
            Law {
                labels,
                mul: Box::new(move |a, b| {
                    let (k, e) = (a % n, a / n);
                    let (l, f) = (b % n, b / n);
                    match (e, f) {
                        (0, _) => (k + l) % n + n * f,
                        (_, 0) => (k + n - l) % n + n,
                        _ => (k + n - l + m) % n,
                    }
                }),
            }
        }
        GroupSpec::Symmetric { n } | GroupSpec::Alternating { n } => {
            let n = *n;
            positive(n, "permutation degree")?;
            let even_only = matches!(spec, GroupSpec::Alternating { .. });
            let perms: Vec<Vec<usize>> =
                permutations(n).into_iter().filter(|p| !even_only || parity(p) == 0).collect();
            if perms.len() > MAX_TABLE_ORDER {
                return Err(too_big(perms.len()));
            }
            let index: HashMap<Vec<usize>, usize> = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
            let labels = perms.iter().map(|p| p.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join("")).collect();
            Law {
                labels,
                mul: Box::new(move |a, b| {
                    // (σ·τ)(i) = σ(τ(i))
                    let comp: Vec<usize> = perms[b].iter().map(|&i| perms[a][i]).collect();
                    index[&comp]
                }),
            }
        }
        GroupSpec::Unitriangular { p } => {
            let p = *p;
            if p < 2 {
                return Err(KakeyaError::InvalidGroup("modulus must be at least 2".into()));
            }
            if p * p * p > MAX_TABLE_ORDER {
                return Err(too_big(p * p * p));
            }
            let split = move |i: usize| (i % p, (i / p) % p, i / (p * p));
            let labels = (0..p * p * p)
                .map(|i| {
                    let (x, y, z) = split(i);
                    format!("({x},{y},{z})")
                })
                .collect();
            Law {
                labels,
                mul: Box::new(move |a, b| {
                    let (x1, y1, z1) = split(a);
                    let (x2, y2, z2) = split(b);
                    let (x, y, z) = ((x1 + x2) % p, (y1 + y2) % p, (z1 + z2 + x1 * y2) % p);
                    x + p * y + p * p * z
                }),
            }
        }
        GroupSpec::Product { factors } => {
            if factors.is_empty() {
                return Err(KakeyaError::InvalidGroup("empty product".into()));
            }
            let laws: Vec<Law> = factors.iter().map(law).collect::<Result<_>>()?;
            let sizes: Vec<usize> = laws.iter().map(|l| l.labels.len()).collect();
            let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s).filter(|&t| t <= MAX_TABLE_ORDER));
            let total = total.ok_or_else(|| too_big(usize::MAX))?;
            // mixed radix, first factor least significant
            let digits = {
                let sizes = sizes.clone();
                move |mut i: usize| -> Vec<usize> {
                    sizes
                        .iter()
                        .map(|&s| {
                            let d = i % s;
                            i /= s;
                            d
                        })
                        .collect()
                }
            };
            let labels = (0..total)
                .map(|i| {
                    let ds = digits(i);
                    let parts: Vec<&str> = ds.iter().zip(&laws).map(|(&d, l)| l.labels[d].as_str()).collect();
                    format!("({})", parts.join(","))
                })
                .collect();
            let muls: Vec<Box<dyn Fn(usize, usize) -> usize>> = laws.into_iter().map(|l| l.mul).collect();
            Law {
                labels,
                mul: Box::new(move |a, b| {
                    let (da, db) = (digits(a), digits(b));
                    let mut out = 0;
                    let mut scale = 1;
                    for ((x, y), (m, &s)) in da.iter().zip(&db).zip(muls.iter().zip(&sizes)) {
                        out += scale * m(*x, *y);
                        scale *= s;
                    }
                    out
                }),
            }
        }
        GroupSpec::Table { table, labels, .. } => {
            let n = table.len();
            if n == 0 || n > MAX_TABLE_ORDER {
                return Err(KakeyaError::InvalidGroup(format!("table order {n} outside 1..={MAX_TABLE_ORDER}")));
            }
            if table.iter().any(|row| row.len() != n) {
                return Err(KakeyaError::InvalidGroup("table is not square".into()));
            }
            let labels = match labels {
                Some(l) if l.len() == n => l.clone(),
                Some(_) => return Err(KakeyaError::InvalidGroup("label count does not match table".into())),
                None => (0..n).map(|i| i.to_string()).collect(),
            };
            let t = table.clone();
            Law { labels, mul: Box::new(move |a, b| t[a][b]) }
        }
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    // lexicographic order, so the identity comes first
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else { break };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
    out
}

fn parity(p: &[usize]) -> usize {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2
}

/// Builds and validates the multiplication table of a spec.
pub fn build_group(spec: &GroupSpec) -> Result<FiniteGroup> {
    let l = law(spec)?;
    let order = l.labels.len();
    if order > MAX_TABLE_ORDER {
        return Err(KakeyaError::InvalidGroup(format!("order {order} exceeds {MAX_TABLE_ORDER}")));
    }
    let mut table = Vec::with_capacity(order * order);
    for a in 0..order {
        for b in 0..order {
            let c = (l.mul)(a, b);
            if c >= order {
                return Err(KakeyaError::InvalidGroup(format!("product {a}·{b} out of range")));
            }
            table.push(c as u32);
        }
    }
    let mut g = FiniteGroup::from_table(spec.to_string(), order, table, l.labels)?;
    g.generators = known_rank(spec).or_else(|| generator_count(&g));
    Ok(g)
}

/// Rank from the spec when it is standard; products of cyclic groups use
/// the largest number of factors divisible by one prime.
fn known_rank(spec: &GroupSpec) -> Option<usize> {
    match spec {
        GroupSpec::Cyclic { m } => Some(usize::from(*m > 1)),
        GroupSpec::Dihedral { m } => Some(if *m <= 1 { 1 } else { 2 }),
        GroupSpec::Dicyclic { .. } => Some(2),
        GroupSpec::Symmetric { n } => Some(match n {
            0 | 1 => 0,
            2 => 1,
            _ => 2,
        }),
        GroupSpec::Alternating { n } => Some(match n {
            0..=2 => 0,
            3 => 1,
            _ => 2,
        }),
        GroupSpec::Unitriangular { .. } => Some(2),
        GroupSpec::Product { factors } => {
            let ms: Option<Vec<usize>> = factors
                .iter()
                .map(|f| match f {
                    GroupSpec::Cyclic { m } => Some(*m),
                    _ => None,
                })
                .collect();
            let ms = ms?;
            let primes: Vec<usize> = (2..=ms.iter().copied().max().unwrap_or(1)).filter(|&p| (2..p).all(|d| p % d != 0)).collect();
            Some(primes.iter().map(|&p| ms.iter().filter(|&&m| m % p == 0).count()).max().unwrap_or(0))
        }
        GroupSpec::Table { .. } => None,
    }
}

/// Smallest generating set size by brute force, or `None` when the search
/// would exceed a fixed budget of closure computations.
pub fn generator_count(g: &FiniteGroup) -> Option<usize> {
    if g.order == 1 {
        return Some(0);
    }
    let n = g.order;
    let mut cost: u64 = 0;
    for k in 1..=n {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            cost += 1;
            if cost > GENERATOR_SEARCH_LIMIT {
                return None;
            }
            if g.closure(&combo).count_ones(..) == n {
                return Some(k);
            }
            // next k-combination of 0..n
            let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else { break };
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    None
}

/// A cyclic subgroup with its smallest generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicSubgroup {
    pub id: usize,
    pub generator: usize,
    pub order: usize,
    pub elements: Vec<usize>,
}

/// Every cyclic subgroup once, in order of smallest generator; the trivial
/// subgroup comes first when the identity has index 0.
pub fn enumerate_cyclic_subgroups(g: &FiniteGroup) -> Vec<CyclicSubgroup> {
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut out = Vec::new();
    for x in 0..g.order {
        let mut elements = Vec::new();
        let mut y = g.identity;
        loop {
            elements.push(y);
            y = g.mul(y, x);
            if y == g.identity {
                break;
            }
        }
        elements.sort_unstable();
        if !seen.contains_key(&elements) {
            let id = out.len();
            seen.insert(elements.clone(), id);
            out.push(CyclicSubgroup { id, generator: x, order: elements.len(), elements });
        }
    }
    out
}

/// Left cosets `gH` as bitsets with their smallest elements.
fn left_cosets(g: &FiniteGroup, h: &CyclicSubgroup) -> Vec<(usize, FixedBitSet)> {
    let mut covered = FixedBitSet::with_capacity(g.order);
    let mut out = Vec::new();
    for x in 0..g.order {
        if covered.contains(x) {
            continue;
        }
        let mut c = FixedBitSet::with_capacity(g.order);
        for &y in &h.elements {
            c.insert(g.mul(x, y));
        }
        covered.union_with(&c);
        out.push((x, c));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetChoice {
    pub subgroup: usize,
    pub generator: usize,
    pub representative: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KakeyaCover {
    pub choices: Vec<CosetChoice>,
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupCheck {
    pub subgroup: usize,
    pub generator: usize,
    pub order: usize,
    /// Smallest `g` with `gH ⊆ E`; `None` marks a violation.
    pub coset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub checks: Vec<SubgroupCheck>,
}

/// Checks that `set` contains a left coset of every cyclic subgroup.
pub fn verify_kakeya(g: &FiniteGroup, set: &[usize]) -> Result<VerifyReport> {
    let mut e = FixedBitSet::with_capacity(g.order);
    for &x in set {
        if x >= g.order {
            return Err(KakeyaError::InvalidInput(format!("element {x} outside a group of order {}", g.order)));
        }
        e.insert(x);
    }
    let checks: Vec<SubgroupCheck> = enumerate_cyclic_subgroups(g)
        .iter()
        .map(|h| SubgroupCheck {
            subgroup: h.id,
            generator: h.generator,
            order: h.order,
            // gH ⊆ E forces g ∈ E
            coset: e.ones().find(|&x| h.elements.iter().all(|&y| e.contains(g.mul(x, y)))),
        })
        .collect();
    Ok(VerifyReport { ok: checks.iter().all(|c| c.coset.is_some()), checks })
}

fn cover_from_set(g: &FiniteGroup, set: &FixedBitSet) -> KakeyaCover {
    let elements: Vec<usize> = set.ones().collect();
    let report = verify_kakeya(g, &elements).expect("elements are in range");
    let choices = report
        .checks
        .iter()
        .filter_map(|c| {
            c.coset.map(|r| CosetChoice { subgroup: c.subgroup, generator: c.generator, representative: r })
        })
        .collect();
    KakeyaCover { choices, elements }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proof {
    /// Every coset combination was enumerated.
    Exhaustive,
    /// Branch-and-bound closed.
    BranchAndBound,
    /// Budget ran out; the cover is an upper bound only.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinReport {
    pub group: String,
    pub order: usize,
    pub min_size: usize,
    pub ratio: f64,
    /// `min_size/order` in lowest terms.
    pub ratio_exact: String,
    pub cover: KakeyaCover,
    pub nodes: u64,
    pub optimal: bool,
    pub proof: Proof,
    pub elapsed_ms: u64,
}

fn ratio_text(a: usize, b: usize) -> String {
    let d = gcd(a, b).max(1);
    format!("{}/{}", a / d, b / d)
}

fn report(g: &FiniteGroup, set: &FixedBitSet, nodes: u64, proof: Proof, start: Instant) -> MinReport {
    let size = set.count_ones(..);
    MinReport {
        group: g.name.clone(),
        order: g.order,
        min_size: size,
        ratio: size as f64 / g.order as f64,
        ratio_exact: ratio_text(size, g.order),
        cover: cover_from_set(g, set),
        nodes,
        optimal: proof != Proof::Heuristic,
        proof,
        elapsed_ms: start.elapsed().as_millis() as u64,
    }
}

/// `a` precedes `b` when their sorted element lists compare that way.
fn lex_less(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    match a.symmetric_difference(b).min() {
        Some(x) => a.contains(x),
        None => false,
    }
}

fn better(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    let (ca, cb) = (a.count_ones(..), b.count_ones(..));
    ca < cb || (ca == cb && lex_less(a, b))
}

fn singleton(g: &FiniteGroup) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(g.order);
    s.insert(g.identity);
    s
}

/// Cyclic subgroups not contained in a larger cyclic subgroup. A coset of
/// `H' ⊇ H` contains a coset of `H`, so these are the only constraints.
fn maximal_subgroups(subs: &[CyclicSubgroup]) -> Vec<&CyclicSubgroup> {
    subs.iter()
        .filter(|h| h.order > 1)
        .filter(|h| {
            !subs.iter().any(|k| k.order > h.order && h.elements.iter().all(|x| k.elements.binary_search(x).is_ok()))
        })
        .collect()
}

/// Cosets of each maximal cyclic subgroup, largest subgroups first.
fn constraint_cosets(g: &FiniteGroup) -> Vec<Vec<(usize, FixedBitSet)>> {
    let subs = enumerate_cyclic_subgroups(g);
    let mut max = maximal_subgroups(&subs);
    max.sort_by(|a, b| b.order.cmp(&a.order).then(a.id.cmp(&b.id)));
    max.into_iter().map(|h| left_cosets(g, h)).collect()
}

/// Largest-overlap-first greedy cover.
pub fn greedy_upper_bound(g: &FiniteGroup) -> KakeyaCover {
    cover_from_set(g, &greedy_set(g, &constraint_cosets(g)))
}

fn greedy_set(g: &FiniteGroup, cosets: &[Vec<(usize, FixedBitSet)>]) -> FixedBitSet {
    if cosets.is_empty() {
        return singleton(g);
    }
    let mut e = FixedBitSet::with_capacity(g.order);
    for list in cosets {
        let best = list
            .iter()
            .min_by(|a, b| a.1.difference_count(&e).cmp(&b.1.difference_count(&e)).then(a.0.cmp(&b.0)))
            .expect("a subgroup has at least one coset");
        e.union_with(&best.1);
    }
    e
}

struct Search<'a> {
    cosets: &'a [Vec<(usize, FixedBitSet)>],
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
    best: FixedBitSet,
    best_size: usize,
    /// Phase two: collect every union of exactly this size.
    collect: Option<usize>,
    optima: HashSet<FixedBitSet>,
}

impl Search<'_> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Picks the unassigned subgroup whose cheapest coset adds the most
    /// elements; its cost is also the lower-bound increment.
    fn branch(&self, e: &FixedBitSet, done: &[bool]) -> Option<(usize, usize)> {
        let mut pick: Option<(usize, usize)> = None;
        for (i, list) in self.cosets.iter().enumerate() {
            if done[i] {
                continue;
            }
            let cheapest = list.iter().map(|c| c.1.difference_count(e)).min().expect("nonempty");
            if pick.is_none_or(|(_, c)| cheapest > c) {
                pick = Some((i, cheapest));
            }
        }
        pick
    }

    fn run(&mut self, e: &FixedBitSet, done: &mut Vec<bool>) {
        if self.tick() {
            return;
        }
        let size = e.count_ones(..);
        let Some((i, bound)) = self.branch(e, done) else {
            match self.collect {
                Some(target) => {
                    if size == target && self.optima.len() < MAX_OPTIMA {
                        self.optima.insert(e.clone());
                    }
                }
                None => {
                    if better(e, &self.best) {
                        self.best = e.clone();
                        self.best_size = size;
                    }
                }
            }
            return;
        };
        let limit = self.collect.unwrap_or(self.best_size.saturating_sub(1));
        if size + bound > limit {
            return;
        }
        done[i] = true;
        if bound == 0 {
            // a coset is already inside E; taking it is never worse
            self.run(e, done);
        } else {
            let mut order: Vec<(usize, usize)> =
                self.cosets[i].iter().enumerate().map(|(k, c)| (c.1.difference_count(e), k)).collect();
            order.sort_unstable();
            for (add, k) in order {
                if size + add > limit {
                    break;
                }
                let mut next = e.clone();
                next.union_with(&self.cosets[i][k].1);
                self.run(&next, done);
                if self.timed_out {
                    break;
                }
            }
        }
        done[i] = false;
    }
}

/// Exact minimum by branch-and-bound over coset choices for the maximal
/// cyclic subgroups.
///
/// Left translation maps Kakeya sets to Kakeya sets, so the largest
/// subgroup's coset is fixed to the subgroup itself. The reported cover is
/// the lexicographically smallest optimum over all translates of the
/// collected optima.
pub fn min_kakeya_exact(g: &FiniteGroup, budget: Duration) -> MinReport {
    let start = Instant::now();
    let cosets = constraint_cosets(g);
    if cosets.is_empty() {
        return report(g, &singleton(g), 0, Proof::BranchAndBound, start);
    }
    let greedy = greedy_set(g, &cosets);
    let mut search = Search {
        cosets: &cosets,
        deadline: start + budget,
        nodes: 0,
        timed_out: false,
        best_size: greedy.count_ones(..) + 1,
        best: greedy.clone(),
        collect: None,
        optima: HashSet::new(),
    };
    // the incumbent's size is allowed so that an equal-size optimum is found
    // inside the symmetry-broken branch
    let root = cosets[0].iter().find(|c| c.1.contains(g.identity)).expect("subgroup contains e").1.clone();
    let mut done = vec![false; cosets.len()];
    done[0] = true;
    search.run(&root, &mut done);
    if search.timed_out {
        let best = search.best.clone();
        return report(g, &best, search.nodes, Proof::Heuristic, start);
    }
    let opt = search.best.count_ones(..);

    search.collect = Some(opt);
    search.run(&root, &mut done);
    let mut best = search.best.clone();
    for set in &search.optima {
        for x in 0..g.order {
            let mut t = FixedBitSet::with_capacity(g.order);
            for y in set.ones() {
                t.insert(g.mul(x, y));
            }
            if better(&t, &best) {
                best = t;
            }
        }
    }
    report(g, &best, search.nodes, Proof::BranchAndBound, start)
}

/// Brute force over subsets in order of size, then lexicographically; the
/// first subset containing a coset of every cyclic subgroup is returned.
/// Independent of the branch-and-bound search.
pub fn min_kakeya_oracle(g: &FiniteGroup) -> Result<MinReport> {
    let start = Instant::now();
    let n = g.order;
    if n > ORACLE_MAX_ORDER {
        return Err(KakeyaError::SearchTooLarge(format!(
            "order {n} exceeds the subset oracle limit {ORACLE_MAX_ORDER}"
        )));
    }
    // every left coset of every cyclic subgroup, as a bitmask, grouped by
    // subgroup
    let mut groups: Vec<Vec<u64>> = Vec::new();
    for h in 0..n {
        let mut cyc = vec![g.identity];
        let mut y = h;
        while y != g.identity {
            cyc.push(y);
            y = g.mul(y, h);
        }
        let mut cosets: Vec<u64> =
            (0..n).map(|x| cyc.iter().fold(0u64, |m, &c| m | 1 << g.mul(x, c))).collect();
        cosets.sort_unstable();
        cosets.dedup();
        if !groups.contains(&cosets) {
            groups.push(cosets);
        }
    }
    let is_kakeya = |set: u64| groups.iter().all(|cs| cs.iter().any(|&c| c & !set == 0));
    let mut nodes = 0u64;
    for k in 1..=n {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            nodes += 1;
            let mask = combo.iter().fold(0u64, |m, &i| m | 1 << i);
            if is_kakeya(mask) {
                let mut set = FixedBitSet::with_capacity(n);
                combo.iter().for_each(|&i| set.insert(i));
                return Ok(report(g, &set, nodes, Proof::Exhaustive, start));
            }
            let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else { break };
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    unreachable!("the whole group is a Kakeya set")
}

/// One row of the ratio table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub group: String,
    pub order: usize,
    pub exponent: usize,
    pub generators: Option<usize>,
    pub min_size: usize,
    pub ratio: f64,
    pub optimal: bool,
}

/// Minimal Kakeya ratios for a list of groups, rows computed in parallel.
pub fn ratio_table(specs: &[GroupSpec], budget: Duration, exec: Execution) -> Result<Vec<RatioRow>> {
    let groups: Vec<FiniteGroup> = specs.iter().map(build_group).collect::<Result<_>>()?;
    Ok(par::map_slice(exec, &groups, |g| {
        let r = min_kakeya_exact(g, budget);
        RatioRow {
            group: g.name.clone(),
            order: g.order,
            exponent: g.exponent(),
            generators: g.generators,
            min_size: r.min_size,
            ratio: r.ratio,
            optimal: r.optimal,
        }
    }))
}

/// Every group of order at most 16 this module can build, up to
/// isomorphism where the constructions coincide.
pub fn small_group_suite() -> Vec<GroupSpec> {
    let z = |m| GroupSpec::Cyclic { m };
    let prod = |f: Vec<GroupSpec>| GroupSpec::Product { factors: f };
    let mut out: Vec<GroupSpec> = (1..=16).map(z).collect();
    out.extend([
        prod(vec![z(2), z(2)]),
        GroupSpec::Symmetric { n: 3 },
        prod(vec![z(2), z(2), z(2)]),
        prod(vec![z(4), z(2)]),
        GroupSpec::Dihedral { m: 4 },
        GroupSpec::Dicyclic { m: 2 },
        prod(vec![z(3), z(3)]),
        GroupSpec::Dihedral { m: 5 },
        prod(vec![z(6), z(2)]),
        GroupSpec::Alternating { n: 4 },
        GroupSpec::Dihedral { m: 6 },
        GroupSpec::Dicyclic { m: 3 },
        GroupSpec::Dihedral { m: 7 },
        prod(vec![z(2), z(2), z(2), z(2)]),
        prod(vec![z(4), z(2), z(2)]),
        prod(vec![z(4), z(4)]),
        prod(vec![z(8), z(2)]),
        GroupSpec::Dihedral { m: 8 },
        GroupSpec::Dicyclic { m: 4 },
        prod(vec![GroupSpec::Dihedral { m: 4 }, z(2)]),
        prod(vec![GroupSpec::Dicyclic { m: 2 }, z(2)]),
    ]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grp(name: &str) -> FiniteGroup {
        build_group(&GroupSpec::parse(name).unwrap()).unwrap()
    }

    #[test]
    fn build_examples() {
        let z5 = grp("Z5");
        assert_eq!(z5.order, 5);
        assert_eq!(z5.generators, Some(1));
        let v4 = grp("Z2xZ2");
        assert_eq!((v4.order, v4.exponent()), (4, 2));
        assert_eq!(v4.generators, Some(2));
        assert_eq!(grp("Z2^3").order, 8);
        assert_eq!(grp("Q8").order, 8);
        assert_eq!(grp("S3").order, 6);
        assert_eq!(grp("A4").order, 12);
    }

    /// Brute-force isomorphism test by backtracking over bijections that
    /// respect element orders.
    fn isomorphic(a: &FiniteGroup, b: &FiniteGroup) -> bool {
        if a.order != b.order {
            return false;
        }
        let n = a.order;
        let oa: Vec<usize> = (0..n).map(|x| a.element_order(x)).collect();
        let ob: Vec<usize> = (0..n).map(|x| b.element_order(x)).collect();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn go(i: usize, a: &FiniteGroup, b: &FiniteGroup, oa: &[usize], ob: &[usize], map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
            let n = a.order;
            if i == n {
                return (0..n).all(|x| (0..n).all(|y| map[a.mul(x, y)] == b.mul(map[x], map[y])));
            }
            for j in 0..n {
                if used[j] || oa[i] != ob[j] {
                    continue;
                }
                map[i] = j;
                used[j] = true;
                let consistent = (0..i).all(|x| {
                    let p = a.mul(x, i);
                    p > i || map[p] == b.mul(map[x], j)
                });
                if consistent && go(i + 1, a, b, oa, ob, map, used) {
                    return true;
                }
                used[j] = false;
            }
            map[i] = usize::MAX;
            false
        }
        go(0, a, b, &oa, &ob, &mut map, &mut used)
    }

    #[test]
    fn unitriangular_mod_two_is_dihedral() {
        let ut = build_group(&GroupSpec::Unitriangular { p: 2 }).unwrap();
        assert_eq!(ut.order, 8);
        assert!(isomorphic(&ut, &grp("D4")));
        assert!(!isomorphic(&ut, &grp("Q8")));
    }

    #[test]
    fn rejects_non_groups() {
        let bad = GroupSpec::Table { table: vec![vec![0, 1], vec![0, 1]], labels: None, name: None };
        assert!(build_group(&bad).is_err());
        let no_assoc = GroupSpec::Table {
            // Latin square without associativity
            table: vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 1, 0]],
            labels: None,
            name: None,
        };
        assert!(build_group(&no_assoc).is_err());
        assert!(GroupSpec::parse("Foo7").is_err());
        assert!(build_group(&GroupSpec::Cyclic { m: 5000 }).is_err());
    }

    #[test]
    fn cyclic_subgroup_examples() {
        assert_eq!(enumerate_cyclic_subgroups(&grp("Z2xZ2")).len(), 4);
        let z33 = enumerate_cyclic_subgroups(&grp("Z3xZ3"));
        assert_eq!(z33.len(), 5);
        assert_eq!(z33.iter().filter(|h| h.order == 3).count(), 4);
        let mut orders: Vec<usize> = enumerate_cyclic_subgroups(&grp("Z6")).iter().map(|h| h.order).collect();
        orders.sort_unstable();
        assert_eq!(orders, vec![1, 2, 3, 6]);
        assert_eq!(enumerate_cyclic_subgroups(&grp("Z6"))[0].order, 1);
    }

    #[test]
    fn verify_examples() {
        let g = grp("Z2xZ2");
        // (a, b) = (1, 0), (0, 1) have indices 1 and 2 in mixed radix
        assert!(verify_kakeya(&g, &(0..4).collect::<Vec<_>>()).unwrap().ok);
        assert!(verify_kakeya(&g, &[0, 1, 2]).unwrap().ok);
        let r = verify_kakeya(&g, &[0, 1]).unwrap();
        assert!(!r.ok);
        assert!(r.checks.iter().any(|c| c.generator == 2 && c.coset.is_none()));
        assert!(verify_kakeya(&g, &[7]).is_err());
    }

    #[test]
    fn exact_examples() {
        for p in [2, 3, 5, 7, 11] {
            let r = min_kakeya_exact(&grp(&format!("Z{p}")), DEFAULT_BUDGET);
            assert_eq!((r.min_size, r.optimal), (p, true));
        }
        let v4 = min_kakeya_exact(&grp("Z2xZ2"), DEFAULT_BUDGET);
        assert_eq!(v4.min_size, 3);
        assert_eq!(v4.ratio_exact, "3/4");
        let z33 = min_kakeya_exact(&grp("Z3xZ3"), DEFAULT_BUDGET);
        assert_eq!(z33.min_size, 7);
        assert_eq!(z33.ratio_exact, "7/9");
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(min_kakeya_oracle(&grp("Z2xZ2")).unwrap().min_size, 3);
        assert_eq!(min_kakeya_oracle(&grp("Z3xZ3")).unwrap().min_size, 7);
        assert_eq!(min_kakeya_oracle(&grp("Z7")).unwrap().min_size, 7);
        assert!(matches!(min_kakeya_oracle(&grp("Z5xZ5")), Err(KakeyaError::SearchTooLarge(_))));
    }

    #[test]
    fn exact_matches_oracle_on_small_groups() {
        for spec in small_group_suite() {
            let g = build_group(&spec).unwrap();
            let oracle = min_kakeya_oracle(&g).unwrap();
            let exact = min_kakeya_exact(&g, DEFAULT_BUDGET);
            assert!(exact.optimal, "{}", g.name);
            assert_eq!(exact.min_size, oracle.min_size, "{}", g.name);
            assert_eq!(exact.cover.elements, oracle.cover.elements, "lexicographic tie-break differs on {}", g.name);
        }
    }

    #[test]
    fn reports_verify_and_bounds_hold() {
        for spec in small_group_suite() {
            let g = build_group(&spec).unwrap();
            let exact = min_kakeya_exact(&g, DEFAULT_BUDGET);
            assert!(verify_kakeya(&g, &exact.cover.elements).unwrap().ok, "{}", g.name);
            let greedy = greedy_upper_bound(&g);
            assert!(verify_kakeya(&g, &greedy.elements).unwrap().ok);
            assert!(greedy.elements.len() >= exact.min_size);
            let largest = enumerate_cyclic_subgroups(&g).iter().map(|h| h.order).max().unwrap();
            assert!(exact.min_size >= largest);
        }
    }

    #[test]
    fn greedy_examples() {
        assert!(greedy_upper_bound(&grp("Z2xZ2")).elements.len() <= 4);
        let z33 = greedy_upper_bound(&grp("Z3xZ3")).elements.len();
        assert!((7..=9).contains(&z33));
        assert_eq!(greedy_upper_bound(&grp("Z5")).elements.len(), 5);
    }

    #[test]
    fn superset_closure_and_translation_invariance() {
        for name in ["Z2xZ2", "Z3xZ3", "S3", "Q8", "D4"] {
            let g = grp(name);
            let e = min_kakeya_exact(&g, DEFAULT_BUDGET).cover.elements;
            for extra in 0..g.order {
                let mut s = e.clone();
                s.push(extra);
                s.sort_unstable();
                s.dedup();
                assert!(verify_kakeya(&g, &s).unwrap().ok);
            }
            let small = &e[..e.len() - 1];
            for x in 0..g.order {
                let t: Vec<usize> = e.iter().map(|&y| g.mul(x, y)).collect();
                assert!(verify_kakeya(&g, &t).unwrap().ok);
                let ts: Vec<usize> = small.iter().map(|&y| g.mul(x, y)).collect();
                assert_eq!(verify_kakeya(&g, small).unwrap().ok, verify_kakeya(&g, &ts).unwrap().ok);
            }
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let r = min_kakeya_exact(&grp("Z2^5"), Duration::from_nanos(1));
        assert!(!r.optimal && r.proof == Proof::Heuristic);
        assert!(verify_kakeya(&grp("Z2^5"), &r.cover.elements).unwrap().ok);
    }

    #[test]
    fn ratio_table_rows() {
        let specs = vec![GroupSpec::parse("Z5").unwrap(), GroupSpec::parse("Z2xZ2").unwrap(), GroupSpec::parse("Z3xZ3").unwrap()];
        let rows = ratio_table(&specs, DEFAULT_BUDGET, Execution::default()).unwrap();
        assert_eq!(rows[0].ratio, 1.0);
        assert_eq!(rows[1].ratio, 0.75);
        assert!((rows[2].ratio - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(rows[2].exponent, 3);
        assert_eq!(rows[2].generators, Some(2));
        let seq = ratio_table(&specs, DEFAULT_BUDGET, Execution::Sequential).unwrap();
        assert_eq!(rows, seq);
    }

    #[test]
    fn generator_count_brute_force_agrees_with_known_ranks() {
        for name in ["Z6", "Z2xZ2", "Z2^3", "S3", "D4", "Q8", "Z4xZ2"] {
            let g = grp(name);
            assert_eq!(generator_count(&g), g.generators, "{name}");
        }
    }

    #[test]
    fn names_roundtrip() {
        for name in ["Z5", "Z3xZ3", "D4", "Q8", "S3", "A4", "Dic3", "UT(3)"] {
            assert_eq!(GroupSpec::parse(name).unwrap().to_string(), name);
        }
        assert_eq!(GroupSpec::parse("Z2^2").unwrap(), GroupSpec::parse("Z2xZ2").unwrap());
    }
}
