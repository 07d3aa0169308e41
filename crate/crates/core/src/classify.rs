//! K-simple germ classes, their normal forms, recognition of a given germ and
//! the per-dimension lists of stable equidistant singularities.
//!
//! Subscripts are treated as names only. Every codimension is computed from
//! the normal form and cached; the catalogue stops a family as soon as the
//! computed value exceeds the bound.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use crate::algebra::{
    default_order, gradient_index, hessian_corank, ideal_quotient, ke_codimension, local_degree,
    poly_determinant, quadratic_form, rank0_reduce, truncated_local_algebra, Codim, TruncatedQuotient,
};
use crate::error::{Error, Result};
use crate::jet::{JetPoly, MapGerm, Monomial};
use crate::linalg::{inertia, rank, rational_roots, UniPoly};
use crate::Rational;
use crate::Germ;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    D,
    E,
    C,
    Ctilde,
    F,
    Gstar,
    H,
    S,
    T,
    Ttilde,
    U,
    W,
    Z,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::D => "D",
            Family::E => "E",
            Family::C => "C",
            Family::Ctilde => "Ctilde",
            Family::F => "F",
            Family::Gstar => "Gstar",
            Family::H => "H",
            Family::S => "S",
            Family::T => "T",
            Family::Ttilde => "Ttilde",
            Family::U => "U",
            Family::W => "W",
            Family::Z => "Z",
        }
    }

    pub fn target_dim(self) -> usize {
        match self {
            Family::A | Family::D | Family::E => 1,
            _ => 2,
        }
    }

    /// Smallest source dimension carrying the normal form.
    pub fn intrinsic_source(self) -> usize {
        match self {
            Family::A => 1,
            Family::D | Family::E | Family::C | Family::Ctilde | Family::F | Family::Gstar | Family::H => 2,
            _ => 3,
        }
    }

    fn has_sign_variants(self, params: &[u32]) -> bool {
        match self {
            Family::D | Family::C | Family::H => true,
            Family::T => params == [8],
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
    Undetermined,
    NotApplicable,
}

impl Sign {
    fn suffix(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Undetermined => "±",
            Sign::NotApplicable => "",
        }
    }
}

/// A row of the K-simple tables with its computed K_e-codimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GermClass {
    family: Family,
    params: Vec<u32>,
    sign: Sign,
    mu: Codim,
}

type Key = (Family, Vec<u32>, Sign);

fn mu_cache() -> &'static Mutex<HashMap<Key, Codim>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Codim>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Drops every cached codimension; later lookups recompute them.
pub fn clear_mu_cache() {
    mu_cache().lock().expect("cache poisoned").clear();
    signature_cache().lock().expect("cache poisoned").clear();
}

fn validate(family: Family, params: &[u32], sign: Sign) -> Result<()> {
    let bad = || Err(Error::InvalidClass(format!("{}{:?} with sign {:?}", family.name(), params, sign)));
    let ok_params = match (family, params) {
        (Family::A, [mu]) => *mu >= 1,
        (Family::D, [mu]) => *mu >= 4,
        (Family::E, [mu]) => (6..=8).contains(mu),
        (Family::C, [k, l]) => *l >= *k && *k >= 2,
        (Family::Ctilde, [p]) => *p >= 6 && p % 2 == 0,
        (Family::F, [p]) => *p >= 7,
        (Family::Gstar, [p]) => *p == 10,
        (Family::H, [p]) => *p >= 9,
        (Family::S, [mu]) => *mu >= 5,
        (Family::T, [p]) => (7..=9).contains(p),
        (Family::Ttilde, [p]) => *p == 7,
        (Family::U, [p]) => (7..=9).contains(p),
        (Family::W, [p]) => (8..=9).contains(p),
        (Family::Z, [p]) => (9..=10).contains(p),
        _ => false,
    };
    if !ok_params {
        return bad();
    }
    let signed = family.has_sign_variants(params);
    if signed == (sign == Sign::NotApplicable) {
        return bad();
    }
    Ok(())
}

impl GermClass {
    /// Validated class; its codimension is computed from the normal form.
    pub fn new(family: Family, params: Vec<u32>, sign: Sign) -> Result<Self> {
        validate(family, &params, sign)?;
        let key = (family, params.clone(), sign);
        let cached = mu_cache().lock().expect("cache poisoned").get(&key).copied();
        let mu = match cached {
            Some(mu) => mu,
            None => {
                let nf = intrinsic_normal_form(family, &params, sign);
                let mu = ke_codimension(&nf);
                mu_cache().lock().expect("cache poisoned").insert(key, mu);
                mu
            }
        };
        Ok(GermClass { family, params, sign, mu })
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn params(&self) -> &[u32] {
        &self.params
    }
    pub fn sign(&self) -> Sign {
        self.sign
    }
    pub fn mu(&self) -> Codim {
        self.mu
    }
    pub fn target_dim(&self) -> usize {
        self.family.target_dim()
    }
    pub fn intrinsic_source(&self) -> usize {
        self.family.intrinsic_source()
    }

    /// Same family and parameters, ignoring the sign.
    pub fn same_type(&self, other: &GermClass) -> bool {
        self.family == other.family && self.params == other.params
    }

    pub fn with_sign(&self, sign: Sign) -> Result<GermClass> {
        GermClass::new(self.family, self.params.clone(), sign)
    }

    /// Conventional table name when it differs from the catalogue name.
    pub fn table_alias(&self) -> Option<String> {
        match self.family {
            Family::Ctilde => Some(format!("C{}", self.params[0])),
            _ => None,
        }
    }

    /// Label as printed in the result table (aliases applied).
    pub fn table_label(&self) -> String {
        self.table_alias().unwrap_or_else(|| self.to_string())
    }
}

impl fmt::Display for GermClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(u32::to_string).collect();
        write!(f, "{}{}{}", self.family.name(), params.join(","), self.sign.suffix())
    }
}

impl FromStr for GermClass {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::Parse(format!("not a class label: {text:?}"));
        let split = text.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (name, rest) = text.split_at(split);
        let family = match name {
            "A" => Family::A,
            "D" => Family::D,
            "E" => Family::E,
            "C" => Family::C,
            "Ctilde" => Family::Ctilde,
            "F" => Family::F,
            "Gstar" | "G*" => Family::Gstar,
            "H" => Family::H,
            "S" => Family::S,
            "T" => Family::T,
            "Ttilde" => Family::Ttilde,
            "U" => Family::U,
            "W" => Family::W,
            "Z" => Family::Z,
            _ => return Err(bad()),
        };
        let (digits, sign) = if let Some(d) = rest.strip_suffix('+') {
            (d, Sign::Plus)
        } else if let Some(d) = rest.strip_suffix('-') {
            (d, Sign::Minus)
        } else if let Some(d) = rest.strip_suffix('±') {
            (d, Sign::Undetermined)
        } else {
            (rest, Sign::NotApplicable)
        };
        let params = digits.split(',').map(|p| p.parse::<u32>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        GermClass::new(family, params, sign)
    }
}

fn pow_term(s: usize, var: usize, e: u32) -> Vec<u16> {
    let mut v = vec![0u16; s];
    v[var] = e as u16;
    v
}

fn mono(s: usize, pairs: &[(usize, u32)]) -> Vec<u16> {
    let mut v = vec![0u16; s];
    for &(i, e) in pairs {
        v[i] += e as u16;
    }
    v
}

fn sign_coeff(sign: Sign) -> i64 {
    if sign == Sign::Minus {
        -1
    } else {
        1
    }
}

/// Normal form at the intrinsic source dimension.
fn intrinsic_normal_form(family: Family, params: &[u32], sign: Sign) -> Germ {
    let s = family.intrinsic_source();
    let order = default_order(s) + 2;
    let sg = sign_coeff(sign);
    let p = params[0];
    let terms = |list: &[(i64, Vec<u16>)]| -> JetPoly<Rational> {
        JetPoly::from_terms(s, order, list.iter().map(|(c, e)| (Monomial(e.clone()), Rational::from_integer((*c).into()))))
    };
    let comps: Vec<JetPoly<Rational>> = match family {
        Family::A => vec![terms(&[(1, pow_term(1, 0, p + 1))])],
        Family::D => vec![terms(&[(1, mono(2, &[(0, 2), (1, 1)])), (sg, pow_term(2, 1, p - 1))])],
        Family::E => match p {
            6 => vec![terms(&[(1, pow_term(2, 0, 3)), (1, pow_term(2, 1, 4))])],
            7 => vec![terms(&[(1, pow_term(2, 0, 3)), (1, mono(2, &[(0, 1), (1, 3)]))])],
            _ => vec![terms(&[(1, pow_term(2, 0, 3)), (1, pow_term(2, 1, 5))])],
        },
        Family::C => {
            let (k, l) = (params[0], params[1]);
            vec![terms(&[(1, mono(2, &[(0, 1), (1, 1)]))]), terms(&[(1, pow_term(2, 0, k)), (sg, pow_term(2, 1, l))])]
        }
        Family::Ctilde => {
            vec![terms(&[(1, pow_term(2, 0, 2)), (1, pow_term(2, 1, 2))]), terms(&[(1, pow_term(2, 1, p / 2))])]
        }
        Family::F => {
            let first = terms(&[(1, pow_term(2, 0, 2)), (1, pow_term(2, 1, 3))]);
            if p % 2 == 1 {
                vec![first, terms(&[(1, pow_term(2, 1, (p - 1) / 2))])]
            } else {
                vec![first, terms(&[(1, mono(2, &[(0, 1), (1, (p - 4) / 2)]))])]
            }
        }
        Family::Gstar => vec![terms(&[(1, pow_term(2, 0, 2))]), terms(&[(1, pow_term(2, 1, 4))])],
        Family::H => vec![
            terms(&[(1, pow_term(2, 0, 2)), (sg, pow_term(2, 1, p - 5))]),
            terms(&[(1, mono(2, &[(0, 1), (1, 2)]))]),
        ],
        Family::S => vec![
            terms(&[(1, pow_term(3, 0, 2)), (1, pow_term(3, 1, 2)), (1, pow_term(3, 2, p - 3))]),
            terms(&[(1, mono(3, &[(1, 1), (2, 1)]))]),
        ],
        Family::T => {
            let last = match p {
                7 => (1, pow_term(3, 2, 3)),
                8 => (sg, pow_term(3, 2, 4)),
                _ => (1, pow_term(3, 2, 5)),
            };
            vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, pow_term(3, 1, 3)), last]),
                terms(&[(1, mono(3, &[(1, 1), (2, 1)]))]),
            ]
        }
        // elliptic real form of T7: y2 y3 replaced by y2^2 + y3^2
        Family::Ttilde => vec![
            terms(&[(1, pow_term(3, 0, 2)), (1, pow_term(3, 1, 3)), (1, pow_term(3, 2, 3))]),
            terms(&[(1, pow_term(3, 1, 2)), (1, pow_term(3, 2, 2))]),
        ],
        Family::U => match p {
            7 => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, mono(3, &[(1, 1), (2, 1)]))]),
                terms(&[(1, mono(3, &[(0, 1), (1, 1)])), (1, pow_term(3, 2, 3))]),
            ],
            8 => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, mono(3, &[(1, 1), (2, 1)])), (1, pow_term(3, 2, 3))]),
                terms(&[(1, mono(3, &[(0, 1), (1, 1)]))]),
            ],
            _ => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, mono(3, &[(1, 1), (2, 1)]))]),
                terms(&[(1, mono(3, &[(0, 1), (1, 1)])), (1, pow_term(3, 2, 4))]),
            ],
        },
        Family::W => match p {
            8 => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, pow_term(3, 2, 3))]),
                terms(&[(1, pow_term(3, 1, 2)), (1, mono(3, &[(0, 1), (2, 1)]))]),
            ],
            _ => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, mono(3, &[(1, 1), (2, 2)]))]),
                terms(&[(1, pow_term(3, 1, 2)), (1, mono(3, &[(0, 1), (2, 1)]))]),
            ],
        },
        Family::Z => match p {
            9 => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, pow_term(3, 2, 3))]),
                terms(&[(1, pow_term(3, 1, 2)), (1, pow_term(3, 2, 3))]),
            ],
            _ => vec![
                terms(&[(1, pow_term(3, 0, 2)), (1, mono(3, &[(1, 1), (2, 2)]))]),
                terms(&[(1, pow_term(3, 1, 2)), (1, pow_term(3, 2, 3))]),
            ],
        },
    };
    MapGerm::new(s, order, comps).expect("normal forms have no constant term")
}

/// Normal form of `class` on `R^k`. Function germs are padded with
/// `+y_i^2` in the extra variables; map-germs to the plane are rank 0 and
/// exist only at their intrinsic source dimension. An undetermined sign uses
/// the `+` representative.
pub fn normal_form(class: &GermClass, k: usize) -> Result<Germ> {
    let s0 = class.intrinsic_source();
    let sign = if class.sign == Sign::Undetermined { Sign::Plus } else { class.sign };
    let nf = intrinsic_normal_form(class.family, &class.params, sign);
    if class.target_dim() == 2 {
        if k != s0 {
            return Err(Error::InvalidClass(format!("{class} lives on R^{s0} only, not R^{k}")));
        }
        return Ok(nf);
    }
    if k < s0 {
        return Err(Error::InvalidClass(format!("{class} needs at least {s0} variables, got {k}")));
    }
    let order = default_order(k) + 2;
    let map: Vec<usize> = (0..s0).collect();
    let mut f = nf.component(0).embed(k, &map).with_order(order);
    for i in s0..k {
        f = &f + &JetPoly::var(k, order, i).pow(2);
    }
    MapGerm::new(k, order, vec![f])
}

fn table1(k: usize, mu_max: usize) -> Vec<GermClass> {
    let mut out = Vec::new();
    take_while_mu(&mut out, mu_max, (1..).map(|m| vec![(Family::A, vec![m], Sign::NotApplicable)]));
    if k >= 2 {
        take_while_mu(
            &mut out,
            mu_max,
            (4..).map(|m| vec![(Family::D, vec![m], Sign::Plus), (Family::D, vec![m], Sign::Minus)]),
        );
        for m in 6..=8 {
            push_if(&mut out, mu_max, Family::E, vec![m], Sign::NotApplicable);
        }
    }
    out
}

fn table2(mu_max: usize) -> Vec<GermClass> {
    let mut out = Vec::new();
    let pm = |f: Family, p: Vec<u32>| vec![(f, p.clone(), Sign::Plus), (f, p, Sign::Minus)];
    for k in 2u32.. {
        let before = out.len();
        take_while_mu(&mut out, mu_max, (k..).map(|l| pm(Family::C, vec![k, l])));
        if out.len() == before || k as usize > mu_max + 2 {
            break;
        }
    }
    take_while_mu(&mut out, mu_max, (3..).map(|k| vec![(Family::Ctilde, vec![2 * k], Sign::NotApplicable)]));
    // F_{2m+1} and F_{2m+4} interleaved by subscript
    let mut fs = Vec::new();
    take_while_mu(&mut fs, mu_max, (3..).map(|m| vec![(Family::F, vec![2 * m + 1], Sign::NotApplicable)]));
    take_while_mu(&mut fs, mu_max, (2..).map(|m| vec![(Family::F, vec![2 * m + 4], Sign::NotApplicable)]));
    fs.sort_by_key(|c| c.params[0]);
    out.extend(fs);
    push_if(&mut out, mu_max, Family::Gstar, vec![10], Sign::NotApplicable);
    take_while_mu(&mut out, mu_max, (4..).map(|m| pm(Family::H, vec![m + 5])));
    out
}

fn table3(mu_max: usize) -> Vec<GermClass> {
    let mut out = Vec::new();
    take_while_mu(&mut out, mu_max, (5..).map(|m| vec![(Family::S, vec![m], Sign::NotApplicable)]));
    push_if(&mut out, mu_max, Family::T, vec![7], Sign::NotApplicable);
    push_if(&mut out, mu_max, Family::Ttilde, vec![7], Sign::NotApplicable);
    push_if(&mut out, mu_max, Family::T, vec![8], Sign::Plus);
    push_if(&mut out, mu_max, Family::T, vec![8], Sign::Minus);
    push_if(&mut out, mu_max, Family::T, vec![9], Sign::NotApplicable);
    for (f, p) in [(Family::U, 7), (Family::U, 8), (Family::U, 9), (Family::W, 8), (Family::W, 9), (Family::Z, 9), (Family::Z, 10)] {
        push_if(&mut out, mu_max, f, vec![p], Sign::NotApplicable);
    }
    out
}

fn within(mu: Codim, mu_max: usize) -> bool {
    mu.finite().is_some_and(|m| m <= mu_max)
}

fn push_if(out: &mut Vec<GermClass>, mu_max: usize, family: Family, params: Vec<u32>, sign: Sign) {
    let class = GermClass::new(family, params, sign).expect("table row");
    if within(class.mu, mu_max) {
        out.push(class);
    }
}

/// Walks a one-parameter family in increasing order until the computed
/// codimension leaves the bound. A safety cap guards against a family whose
/// codimension does not grow.
fn take_while_mu(out: &mut Vec<GermClass>, mu_max: usize, family: impl Iterator<Item = Vec<(Family, Vec<u32>, Sign)>>) {
    for (steps, group) in family.enumerate() {
        if steps > mu_max + 4 {
            break;
        }
        let classes: Vec<GermClass> =
            group.into_iter().map(|(f, p, s)| GermClass::new(f, p, s).expect("table row")).collect();
        if !classes.iter().all(|c| within(c.mu, mu_max)) {
            break;
        }
        out.extend(classes);
    }
}

/// Classes realizable as rank-0 germs `(R^k, 0) -> (R^l, 0)` with codimension at most `mu_max`.
pub fn catalogue(k: usize, l: usize, mu_max: usize) -> Vec<GermClass> {
    match (k, l) {
        (k, 1) if k >= 1 => table1(k, mu_max),
        (2, 2) => table2(mu_max),
        (3, 2) => table3(mu_max),
        _ => Vec::new(),
    }
}

/// Whether `(k, l)` is covered by one of the three tables.
pub fn in_tables(k: usize, l: usize) -> bool {
    (k >= 1 && l == 1) || (l == 2 && (k == 2 || k == 3))
}

/// Whether `(2n, q)` is a pair of nice dimensions.
pub fn is_nice_dimensions(n: usize, q: usize) -> Result<bool> {
    if q <= n || q > 2 * n {
        return Err(Error::Domain(format!("need n < q <= 2n, got n = {n}, q = {q}")));
    }
    Ok((q == 2 * n && n <= 4) || (q + 1 == 2 * n && n <= 4) || (q + 2 == 2 * n && n <= 3) || (q + 3 <= 2 * n && q <= 6))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmptyReason {
    NotInTables,
    MuExceedsQ,
}

impl EmptyReason {
    pub fn tag(self) -> &'static str {
        match self {
            EmptyReason::NotInTables => "NOT_IN_TABLES",
            EmptyReason::MuExceedsQ => "MU_EXCEEDS_Q",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StableRow {
    pub k: usize,
    pub l: usize,
    pub classes: Vec<GermClass>,
    pub empty_reason: Option<EmptyReason>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StableList {
    pub n: usize,
    pub q: usize,
    pub rows: Vec<StableRow>,
}

impl StableList {
    /// One line: `k=1: A1 A2 | k=2: C2,2+ C2,2-`. Empty rows are omitted.
    pub fn summary(&self) -> String {
        self.rows
            .iter()
            .filter(|r| !r.classes.is_empty())
            .map(|r| {
                let labels: Vec<String> = r.classes.iter().map(ToString::to_string).collect();
                format!("k={}: {}", r.k, labels.join(" "))
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }

    /// Every class with table aliases applied, in row order.
    pub fn table_labels(&self) -> Vec<String> {
        self.rows.iter().flat_map(|r| r.classes.iter().map(GermClass::table_label)).collect()
    }
}

/// Stable singularities of affine equidistants of `M^n ⊂ R^q`.
pub fn stable_singularities(n: usize, q: usize) -> Result<StableList> {
    if !is_nice_dimensions(n, q)? {
        return Err(Error::NotNiceDimensions { n, q });
    }
    let shift = 2 * n - q;
    let rows = (1.max(shift + 1)..=n)
        .map(|k| {
            let l = k - shift;
            let classes = catalogue(k, l, q);
            let empty_reason = if !classes.is_empty() {
                None
            } else if in_tables(k, l) {
                Some(EmptyReason::MuExceedsQ)
            } else {
                Some(EmptyReason::NotInTables)
            };
            StableRow { k, l, classes, empty_reason }
        })
        .collect();
    Ok(StableList { n, q, rows })
}

/// Real classification of the pencil spanned by the quadratic parts of a
/// germ to the plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pencil {
    /// Both quadratic parts vanish.
    Zero,
    /// One-dimensional span: rank and absolute signature of its generator.
    Single { rank: usize, abs_signature: usize },
    /// Two-dimensional span. Each real root of `det(a Q1 + b Q2)` on the
    /// projective line with its multiplicity and, for rational roots, the
    /// inertia of the degenerate member up to sign; then the number of
    /// non-real roots.
    Pair { real: Vec<(usize, Option<(usize, usize)>)>, complex: usize },
    /// `det(a Q1 + b Q2)` vanishes identically.
    Degenerate,
}

fn pencil_of(f: &Germ) -> Pencil {
    let q1 = quadratic_form(f.component(0));
    let q2 = quadratic_form(f.component(1));
    let flat = |m: &Vec<Vec<Rational>>| m.iter().flatten().cloned().collect::<Vec<_>>();
    let span = rank(&[flat(&q1), flat(&q2)]);
    match span {
        0 => Pencil::Zero,
        1 => {
            let q = if q1.iter().flatten().any(|v| v != &Rational::from_integer(0.into())) { q1 } else { q2 };
            let (p, n, _) = inertia(&q);
            Pencil::Single { rank: p + n, abs_signature: p.abs_diff(n) }
        }
        _ => {
            let s = q1.len();
            let entries: Vec<Vec<UniPoly<Rational>>> = (0..s)
                .map(|i| (0..s).map(|j| UniPoly::new(vec![q2[i][j].clone(), q1[i][j].clone()])).collect())
                .collect();
            let p = uni_determinant(&entries);
            if p.is_zero() {
                return Pencil::Degenerate;
            }
            let inertia_at = |form: &Vec<Vec<Rational>>| {
                let (pos, neg, _) = inertia(form);
                Some((pos.max(neg), pos.min(neg)))
            };
            let mut real = Vec::new();
            let mut complex = 0;
            for (factor, mult) in p.squarefree_decomposition() {
                let count = factor.count_real_roots();
                let rational = rational_roots(&factor);
                for r in &rational {
                    let form: Vec<Vec<Rational>> =
                        (0..s).map(|i| (0..s).map(|j| &q2[i][j] + r * &q1[i][j]).collect()).collect();
                    real.push((mult, inertia_at(&form)));
                }
                real.extend(std::iter::repeat_n((mult, None), count - rational.len()));
                complex += (factor.degree().unwrap_or(0) - count) * mult;
            }
            let at_infinity = s - p.degree().unwrap_or(0);
            if at_infinity > 0 {
                real.push((at_infinity, inertia_at(&q1)));
            }
            real.sort_unstable();
            Pencil::Pair { real, complex }
        }
    }
}

fn uni_determinant(m: &[Vec<UniPoly<Rational>>]) -> UniPoly<Rational> {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = UniPoly::new(Vec::new());
    for j in 0..n {
        let minor: Vec<Vec<UniPoly<Rational>>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect()).collect();
        let mut term = m[0][j].mul(&uni_determinant(&minor));
        if j % 2 == 1 {
            term = term.scale(&Rational::from_integer((-1).into()));
        }
        acc = acc.add(&term);
    }
    acc
}

pub const MAP_HILBERT_DEGREE: usize = 6;

/// K-invariants used for recognition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub target_dim: usize,
    pub mu: Codim,
    /// Hessian corank for function germs, source dimension for map-germs to the plane.
    pub corank: usize,
    /// Hilbert function of `E/(f, ∂f)` for functions; for maps, of the local
    /// algebra truncated above degree [`MAP_HILBERT_DEGREE`] (it may be infinite).
    pub hilbert: Vec<usize>,
    /// Hilbert function of the local algebra plus maximal Jacobian minors,
    /// truncated like `hilbert` (maps only).
    pub hilbert_minors: Vec<usize>,
    pub pencil: Option<Pencil>,
}

/// Invariants of a rank-0 germ.
pub fn signature(f: &Germ) -> Signature {
    let (s, t) = (f.source_dim(), f.target_dim());
    let mu = ke_codimension(f);
    if t == 1 {
        let g = f.component(0);
        let mut gens = vec![g.clone()];
        gens.extend((0..s).map(|i| g.derivative(i)));
        let tjurina = ideal_quotient(s, &gens, default_order(s));
        return Signature {
            target_dim: 1,
            mu,
            corank: hessian_corank(g),
            hilbert: tjurina.hilbert,
            hilbert_minors: Vec::new(),
            pencil: None,
        };
    }
    let (_, local) = truncated_local_algebra(f, MAP_HILBERT_DEGREE);
    let mut gens: Vec<JetPoly<Rational>> = f.components().to_vec();
    if t == 2 {
        let jac = f.jacobian();
        for a in 0..s {
            for b in a + 1..s {
                let minor = vec![vec![jac[0][a].clone(), jac[0][b].clone()], vec![jac[1][a].clone(), jac[1][b].clone()]];
                gens.push(poly_determinant(&minor, s, f.order()));
            }
        }
    }
    let wrapped: Vec<Vec<JetPoly<Rational>>> = gens.into_iter().map(|g| vec![g]).collect();
    let minors = TruncatedQuotient::new(s, 1, &wrapped, MAP_HILBERT_DEGREE).hilbert_up_to(MAP_HILBERT_DEGREE);
    Signature {
        target_dim: t,
        mu,
        corank: s,
        hilbert: local,
        hilbert_minors: minors,
        pencil: (t == 2).then(|| pencil_of(f)),
    }
}

/// Real invariant separating sign variants: the absolute index of the
/// gradient for functions, the absolute local degree for equidimensional maps.
pub fn real_invariant(f: &Germ) -> Option<i64> {
    match (f.source_dim(), f.target_dim()) {
        (_, 1) => gradient_index(f.component(0)).map(i64::abs),
        (s, t) if s == t => local_degree(f).map(i64::abs),
        _ => None,
    }
}

type SigEntry = (Signature, Option<i64>);

fn signature_cache() -> &'static Mutex<HashMap<Key, SigEntry>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, SigEntry>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn class_signature(class: &GermClass) -> SigEntry {
    let key = (class.family, class.params.clone(), class.sign);
    if let Some(hit) = signature_cache().lock().expect("cache poisoned").get(&key) {
        return hit.clone();
    }
    let nf = intrinsic_normal_form(class.family, &class.params, class.sign);
    let entry = (signature(&nf), if class.sign == Sign::NotApplicable { None } else { real_invariant(&nf) });
    signature_cache().lock().expect("cache poisoned").insert(key, entry.clone());
    entry
}

/// Class of a germ with finite codimension. Germs with a linear part are
/// reduced to rank 0 first.
pub fn recognize(f: &Germ) -> Result<GermClass> {
    let theta = rank0_reduce(f)?;
    let sig = signature(&theta);
    let Codim::Finite(mu) = sig.mu else {
        return Err(Error::Infinite);
    };
    let (s, t) = (theta.source_dim(), theta.target_dim());
    let candidates = match t {
        1 => catalogue(s.max(1), 1, mu),
        2 if s == 2 || s == 3 => catalogue(s, 2, mu),
        _ => Vec::new(),
    };
    let matching: Vec<GermClass> = candidates.into_iter().filter(|c| class_signature(c).0 == sig).collect();
    let Some(first) = matching.first().cloned() else {
        return Err(Error::Unrecognized(format!("no table class with the invariants of {theta}")));
    };
    let variants: Vec<GermClass> = matching.iter().filter(|c| c.same_type(&first)).cloned().collect();
    if variants.len() == 1 {
        return Ok(first);
    }
    let own = real_invariant(&theta);
    let hits: Vec<&GermClass> = variants.iter().filter(|c| own.is_some() && class_signature(c).1 == own).collect();
    match hits.as_slice() {
        [only] => Ok((*only).clone()),
        _ => first.with_sign(Sign::Undetermined),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::poly;

    fn class(label: &str) -> GermClass {
        label.parse().unwrap()
    }

    #[test]
    fn labels_round_trip() {
        for label in ["A3", "D4+", "D5-", "C2,3-", "Ctilde6", "S5", "Ttilde7", "F7", "Gstar10", "H9+", "T8-", "W9", "D6±"] {
            assert_eq!(class(label).to_string(), label);
        }
        assert!("A0".parse::<GermClass>().is_err());
        assert!("C3,2+".parse::<GermClass>().is_err());
        assert!("D4".parse::<GermClass>().is_err());
        assert!("A3+".parse::<GermClass>().is_err());
        assert!("Ctilde7".parse::<GermClass>().is_err());
        assert!("Q5".parse::<GermClass>().is_err());
        assert_eq!(class("Ctilde8").table_label(), "C8");
    }

    #[test]
    fn normal_form_examples() {
        let a2 = normal_form(&class("A2"), 3).unwrap();
        assert_eq!(a2.component(0).to_string(), "y2^2 + y3^2 + y1^3");
        let c22 = normal_form(&class("C2,2+"), 2).unwrap();
        assert_eq!(c22.to_string(), "(y1*y2, y1^2 + y2^2)");
        let s5 = normal_form(&class("S5"), 3).unwrap();
        assert_eq!(s5.to_string(), "(y1^2 + y2^2 + y3^2, y2*y3)");
        assert!(normal_form(&class("C2,2+"), 3).is_err());
        assert!(normal_form(&class("D4+"), 1).is_err());
    }

    #[test]
    fn nice_dimensions() {
        assert!(!is_nice_dimensions(4, 6).unwrap());
        assert!(is_nice_dimensions(3, 5).unwrap());
        assert!(is_nice_dimensions(5, 6).unwrap());
        assert!(!is_nice_dimensions(5, 7).unwrap());
        assert!(is_nice_dimensions(3, 3).is_err());
        assert!(is_nice_dimensions(2, 5).is_err());
    }

    #[test]
    fn catalogue_examples() {
        let labels = |v: Vec<GermClass>| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        assert_eq!(labels(catalogue(2, 2, 4)), ["C2,2+", "C2,2-"]);
        assert_eq!(labels(catalogue(3, 2, 5)), ["S5"]);
        assert_eq!(labels(catalogue(3, 1, 4)), ["A1", "A2", "A3", "A4", "D4+", "D4-"]);
        assert!(catalogue(3, 3, 8).is_empty());
    }

    #[test]
    fn recognizes_simple_examples() {
        let f = MapGerm::new(2, 12, vec![poly(2, 12, &[(1, &[3, 0]), (1, &[0, 2])])]).unwrap();
        assert_eq!(recognize(&f).unwrap().to_string(), "A2");
        let c22 = normal_form(&class("C2,2+"), 2).unwrap();
        assert_eq!(recognize(&c22).unwrap().to_string(), "C2,2+");
        let c22m = normal_form(&class("C2,2-"), 2).unwrap();
        assert_eq!(recognize(&c22m).unwrap().to_string(), "C2,2-");
        let s5 = normal_form(&class("S5"), 3).unwrap();
        assert_eq!(recognize(&s5).unwrap().to_string(), "S5");
    }
}
