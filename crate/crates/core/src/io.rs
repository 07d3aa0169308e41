//! JSON, CSV and SVG formats used by the command-line tool.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::default_order;
use crate::classify::{EmptyReason, GermClass, StableList, StableRow};
use crate::error::{Error, Result};
use crate::geometry::{EquidistantBranch, ParametricManifold, SingularityLabel};
use crate::jet::{JetPoly, MapGerm, Monomial};
use crate::scalar::{format_rational, parse_rational};
use crate::{Germ, Pair, Rational};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))
}

/// Exact coefficient: a `"p/q"` or decimal string, or a JSON number.
pub fn coeff_from_value(v: &Value) -> Result<Rational> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(parse_err(format!("coefficient must be a string or number, got {other}"))),
    };
    parse_rational(&text).ok_or_else(|| parse_err(format!("bad coefficient {text:?}")))
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeff: Value,
    exponents: Vec<u16>,
}

#[derive(Serialize, Deserialize)]
struct GermJson {
    source_dim: usize,
    target_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
    components: Vec<Vec<TermJson>>,
}

fn components_from_json(s: usize, comps: &[Vec<TermJson>]) -> Result<Vec<Vec<(Monomial, Rational)>>> {
    comps
        .iter()
        .map(|terms| {
            terms
                .iter()
                .map(|t| {
                    if t.exponents.len() != s {
                        return Err(parse_err(format!("exponent vector {:?} needs {s} entries", t.exponents)));
                    }
                    Ok((Monomial(t.exponents.clone()), coeff_from_value(&t.coeff)?))
                })
                .collect()
        })
        .collect()
}

fn build_germ(s: usize, order: usize, terms: Vec<Vec<(Monomial, Rational)>>) -> Result<Germ> {
    MapGerm::new(s, order, terms.into_iter().map(|t| JetPoly::from_terms(s, order, t)).collect())
}

fn max_degree(terms: &[Vec<(Monomial, Rational)>]) -> usize {
    terms.iter().flatten().map(|(m, _)| m.degree()).max().unwrap_or(0)
}

/// Parses a germ. Without an explicit order the jet keeps every given term
/// and is at least as deep as the default algebra order.
pub fn germ_from_json(text: &str) -> Result<Germ> {
    let g: GermJson = from_json(text)?;
    if g.components.len() != g.target_dim {
        return Err(parse_err(format!(
            "target_dim is {} but {} components were given",
            g.target_dim,
            g.components.len()
        )));
    }
    let terms = components_from_json(g.source_dim, &g.components)?;
    let order = g.order.unwrap_or_else(|| max_degree(&terms).max(default_order(g.source_dim)));
    build_germ(g.source_dim, order, terms)
}

fn components_to_json(g: &Germ) -> Vec<Vec<TermJson>> {
    g.components()
        .iter()
        .map(|c| {
            c.terms()
                .map(|(m, v)| TermJson { coeff: Value::String(format_rational(v)), exponents: m.0.clone() })
                .collect()
        })
        .collect()
}

pub fn germ_to_json(g: &Germ) -> String {
    let out = GermJson {
        source_dim: g.source_dim(),
        target_dim: g.target_dim(),
        order: Some(g.order()),
        components: components_to_json(g),
    };
    serde_json::to_string_pretty(&out).expect("serializable")
}

/// A family of a pair given either as a bare list of components or as a
/// full germ object.
#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyJson {
    Components(Vec<Vec<TermJson>>),
    Germ(GermJson),
}

#[derive(Deserialize)]
struct PairJson {
    n: usize,
    q: usize,
    k: usize,
    #[serde(default)]
    lambda: Option<Value>,
    #[serde(default)]
    order: Option<usize>,
    phi: FamilyJson,
    psi: FamilyJson,
    eta: FamilyJson,
    zeta: FamilyJson,
}

#[derive(Serialize)]
struct PairOut {
    n: usize,
    q: usize,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<String>,
    order: usize,
    phi: Vec<Vec<TermJson>>,
    psi: Vec<Vec<TermJson>>,
    eta: Vec<Vec<TermJson>>,
    zeta: Vec<Vec<TermJson>>,
}

/// Parses a graph pair and its optional `lambda`.
pub fn graph_pair_from_json(text: &str) -> Result<(Pair, Option<Rational>)> {
    let p: PairJson = from_json(text)?;
    let n = p.n;
    let mut fams = Vec::new();
    for (name, f) in [("phi", &p.phi), ("psi", &p.psi), ("eta", &p.eta), ("zeta", &p.zeta)] {
        let comps = match f {
            FamilyJson::Components(c) => c,
            FamilyJson::Germ(g) => {
                if g.source_dim != n || g.target_dim != g.components.len() {
                    return Err(parse_err(format!("{name}: inconsistent germ dimensions")));
                }
                &g.components
            }
        };
        fams.push(components_from_json(n, comps).map_err(|e| parse_err(format!("{name}: {e}")))?);
    }
    let order = p.order.unwrap_or_else(|| fams.iter().map(|f| max_degree(f)).max().unwrap_or(0).max(default_order(p.k)));
    let mut germs = fams.into_iter().map(|t| build_germ(n, order, t));
    let (phi, psi, eta, zeta) = (
        germs.next().expect("four")?,
        germs.next().expect("four")?,
        germs.next().expect("four")?,
        germs.next().expect("four")?,
    );
    let lambda = p.lambda.as_ref().map(coeff_from_value).transpose()?;
    let gp = Pair::new(n, p.q, p.k, phi, psi, eta, zeta).map_err(|e| match e {
        Error::DimensionMismatch(m) => parse_err(m),
        other => other,
    })?;
    Ok((gp, lambda))
}

pub fn graph_pair_to_json(gp: &Pair, lambda: Option<&Rational>) -> String {
    let out = PairOut {
        n: gp.n(),
        q: gp.q(),
        k: gp.k(),
        lambda: lambda.map(format_rational),
        order: gp.order(),
        phi: components_to_json(gp.phi()),
        psi: components_to_json(gp.psi()),
        eta: components_to_json(gp.eta()),
        zeta: components_to_json(gp.zeta()),
    };
    serde_json::to_string_pretty(&out).expect("serializable")
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CurveJson {
    Ellipse { a: f64, b: f64 },
    Circle { r: f64 },
    FourierOval {
        #[serde(default)]
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
    },
    Torus { major: f64, minor: f64 },
    Graph { f: Vec<GermJson> },
    Samples {
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        q: Option<usize>,
        grid: Vec<Vec<f64>>,
    },
}

/// Parses a curve or surface description.
pub fn manifold_from_json(text: &str) -> Result<ParametricManifold> {
    match from_json::<CurveJson>(text)? {
        CurveJson::Ellipse { a, b } => ParametricManifold::ellipse(a, b),
        CurveJson::Circle { r } => ParametricManifold::circle(r),
        CurveJson::FourierOval { a, b } => ParametricManifold::fourier_oval(a, b),
        CurveJson::Torus { major, minor } => ParametricManifold::torus(major, minor),
        CurveJson::Graph { f } => {
            let mut funcs = Vec::new();
            for g in f {
                if g.target_dim != 1 || g.components.len() != 1 {
                    return Err(parse_err("graph functions must be scalar"));
                }
                let terms = components_from_json(g.source_dim, &g.components)?;
                let order = max_degree(&terms).max(1);
                let poly = JetPoly::from_terms(g.source_dim, order, terms.into_iter().next().expect("one"));
                funcs.push(poly.convert(crate::scalar::to_f64));
            }
            ParametricManifold::graph(funcs)
        }
        CurveJson::Samples { n, q, grid } => {
            if n.is_some_and(|n| n != 1) {
                return Err(Error::Domain("sampled input is supported for closed curves (n = 1)".into()));
            }
            if let (Some(q), Some(row)) = (q, grid.first()) {
                if row.len() != q {
                    return Err(parse_err(format!("samples have {} coordinates, q = {q}", row.len())));
                }
            }
            ParametricManifold::samples(grid)
        }
    }
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct RowJson {
    k: usize,
    l: usize,
    classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    empty_reason: Option<String>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct AliasJson {
    label: String,
    class: String,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct StableListJson {
    n: usize,
    q: usize,
    rows: Vec<RowJson>,
    /// Table labels that stand for a differently named catalogue class.
    interpretations: Vec<AliasJson>,
}

pub fn stable_list_to_json(list: &StableList) -> String {
    let rows = list
        .rows
        .iter()
        .map(|r| RowJson {
            k: r.k,
            l: r.l,
            classes: r.classes.iter().map(GermClass::to_string).collect(),
            empty_reason: r.empty_reason.map(|e| e.tag().to_string()),
        })
        .collect();
    let interpretations = list
        .rows
        .iter()
        .flat_map(|r| r.classes.iter())
        .filter_map(|c| c.table_alias().map(|label| AliasJson { label, class: c.to_string() }))
        .collect();
    serde_json::to_string_pretty(&StableListJson { n: list.n, q: list.q, rows, interpretations })
        .expect("serializable")
}

pub fn stable_list_from_json(text: &str) -> Result<StableList> {
    let j: StableListJson = from_json(text)?;
    let rows = j
        .rows
        .into_iter()
        .map(|r| {
            let classes = r.classes.iter().map(|c| c.parse::<GermClass>()).collect::<Result<Vec<_>>>()?;
            let empty_reason = match r.empty_reason.as_deref() {
                None => None,
                Some("NOT_IN_TABLES") => Some(EmptyReason::NotInTables),
                Some("MU_EXCEEDS_Q") => Some(EmptyReason::MuExceedsQ),
                Some(other) => return Err(parse_err(format!("unknown empty reason {other}"))),
            };
            Ok(StableRow { k: r.k, l: r.l, classes, empty_reason })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StableList { n: j.n, q: j.q, rows })
}

/// Plain-text table, one line per degree of parallelism; interpreted table
/// labels are marked with `*` and explained below the table.
pub fn stable_list_table(list: &StableList) -> String {
    let header = ("k", "target", "classes");
    let mut body = Vec::new();
    let mut notes = Vec::new();
    for r in &list.rows {
        let classes = if r.classes.is_empty() {
            format!("-  ({})", r.empty_reason.map_or("", EmptyReason::tag))
        } else {
            r.classes
                .iter()
                .map(|c| match c.table_alias() {
                    Some(alias) => {
                        notes.push(format!("* {alias} read as {c}"));
                        format!("{alias}*")
                    }
                    None => c.to_string(),
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        body.push((r.k.to_string(), format!("R^{} -> R^{}", r.k, r.l), classes));
    }
    let w0 = body.iter().map(|b| b.0.len()).chain([header.0.len()]).max().unwrap_or(1);
    let w1 = body.iter().map(|b| b.1.len()).chain([header.1.len()]).max().unwrap_or(1);
    let mut out = format!("n = {}, q = {}\n", list.n, list.q);
    let _ = writeln!(out, "{:<w0$}  {:<w1$}  {}", header.0, header.1, header.2);
    for (a, b, c) in body {
        let _ = writeln!(out, "{a:<w0$}  {b:<w1$}  {c}");
    }
    for n in notes {
        let _ = writeln!(out, "{n}");
    }
    out
}

fn label_at(branch: &EquidistantBranch, index: usize) -> String {
    let tags: Vec<&str> = branch.annotations.iter().filter(|a| a.index == index).map(|a| a.label.tag()).collect();
    if tags.is_empty() && branch.degenerate {
        return "DEGENERATE".into();
    }
    let mut tags = tags;
    tags.dedup();
    tags.join(";")
}

/// CSV with columns `branch_id, sigma, s, t, x1..xq, label`. Surfaces write
/// their parameter pairs as `s1;s2` and `t1;t2`.
pub fn branches_to_csv(branches: &[EquidistantBranch], q: usize) -> String {
    let mut out = String::from("branch_id,sigma,s,t");
    for i in 1..=q {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",label\n");
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(";");
    for (b, br) in branches.iter().enumerate() {
        for (i, s) in br.samples.iter().enumerate() {
            let _ = write!(out, "{b},{:.12},{},{}", s.sigma, join(&s.pair.s), join(&s.pair.t));
            for x in &s.x {
                let _ = write!(out, ",{x:.12}");
            }
            let _ = writeln!(out, ",{}", label_at(br, i));
        }
    }
    out
}

/// SVG drawing of planar branches (first two coordinates), cusps as red
/// circles and nodes as blue squares.
pub fn branches_to_svg(branches: &[EquidistantBranch], curve: Option<&[Vec<f64>]>) -> String {
    let pts = branches.iter().flat_map(|b| b.samples.iter().map(|s| (s.x[0], s.x[1])));
    let extra = curve.into_iter().flatten().map(|p| (p[0], p[1]));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts.chain(extra) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let size = 600.0;
    let pad = 20.0;
    let sx = |x: f64| pad + (x - x0) / span * (size - 2.0 * pad);
    let sy = |y: f64| size - pad - (y - y0) / span * (size - 2.0 * pad);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let polyline = |points: Vec<(f64, f64)>, closed: bool, style: &str| {
        let mut d: Vec<String> = points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        if closed {
            if let Some(first) = d.first().cloned() {
                d.push(first);
            }
        }
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", d.join(" "))
    };
    if let Some(c) = curve {
        out.push_str(&polyline(c.iter().map(|p| (p[0], p[1])).collect(), true, "stroke=\"#999\" stroke-width=\"1\""));
    }
    for (b, br) in branches.iter().enumerate() {
        let points: Vec<(f64, f64)> = br.samples.iter().map(|s| (s.x[0], s.x[1])).collect();
        let _ = writeln!(out, "<g id=\"branch{b}\">");
        out.push_str(&polyline(points, br.closed, "stroke=\"black\" stroke-width=\"1.5\""));
        for a in &br.annotations {
            let (x, y) = (sx(a.x[0]), sy(a.x[1]));
            match a.label {
                SingularityLabel::A2Cusp | SingularityLabel::Higher => {
                    let _ = writeln!(out, "<circle class=\"cusp\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"red\"/>");
                }
                SingularityLabel::A1Node => {
                    let _ = writeln!(
                        out,
                        "<rect class=\"node\" x=\"{:.2}\" y=\"{:.2}\" width=\"6\" height=\"6\" fill=\"blue\"/>",
                        x - 3.0,
                        y - 3.0
                    );
                }
                SingularityLabel::Unresolved => {
                    let _ = writeln!(out, "<circle class=\"unresolved\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"none\" stroke=\"orange\"/>");
                }
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ke_codimension;
    use crate::classify::stable_singularities;

    #[test]
    fn germ_round_trip() {
        let text = r#"{"source_dim":1,"target_dim":1,"order":6,"components":[[{"coeff":"1","exponents":[3]},{"coeff":0.5,"exponents":[4]}]]}"#;
        let g = germ_from_json(text).unwrap();
        assert_eq!(g.to_string(), "(y1^3 + 1/2*y1^4)");
        assert_eq!(germ_from_json(&germ_to_json(&g)).unwrap(), g);
        assert_eq!(ke_codimension(&g).finite(), Some(2));
    }

    #[test]
    fn bad_germs_are_parse_errors() {
        for text in [
            "{",
            r#"{"source_dim":1,"target_dim":2,"components":[[]]}"#,
            r#"{"source_dim":2,"target_dim":1,"components":[[{"coeff":"1","exponents":[3]}]]}"#,
            r#"{"source_dim":1,"target_dim":1,"components":[[{"coeff":"1/0","exponents":[3]}]]}"#,
        ] {
            assert_eq!(germ_from_json(text).unwrap_err().code(), "PARSE", "{text}");
        }
    }

    #[test]
    fn pair_round_trip() {
        let text = r#"{"n":1,"q":2,"k":1,"lambda":"1/3",
            "phi":[[{"coeff":"1","exponents":[2]}]],"psi":[],"eta":[],
            "zeta":[[{"coeff":"-1","exponents":[2]},{"coeff":"1","exponents":[3]}]]}"#;
        let (gp, lambda) = graph_pair_from_json(text).unwrap();
        assert_eq!(lambda, Some(Rational::new(1.into(), 3.into())));
        let again = graph_pair_from_json(&graph_pair_to_json(&gp, lambda.as_ref())).unwrap();
        assert_eq!(again.0, gp);
    }

    #[test]
    fn curves() {
        let m = manifold_from_json(r#"{"kind":"fourier_oval","a":[0,0,0.2]}"#).unwrap();
        assert!((m.point(&[0.0])[0] - 1.2).abs() < 1e-15);
        assert!(manifold_from_json(r#"{"kind":"spiral"}"#).is_err());
        let m = manifold_from_json(r#"{"kind":"graph","f":[{"source_dim":2,"target_dim":1,"components":[[{"coeff":1,"exponents":[2,0]}]]}]}"#).unwrap();
        assert_eq!((m.n(), m.q()), (2, 3));
    }

    #[test]
    fn stable_list_formats() {
        let list = stable_singularities(3, 6).unwrap();
        let json = stable_list_to_json(&list);
        assert_eq!(stable_list_from_json(&json).unwrap(), list);
        assert!(json.contains("\"label\": \"C6\""));
        let table = stable_list_table(&list);
        assert!(table.contains("C6*"), "{table}");
    }
}
