//! Scenario files: TOML with a catalog reference or inline structure
//! constants, 1-indexed as `bracket = [[i, j, k, value], ...]` meaning
//! `mu(e_i, e_j)` has `value` along `e_k`. Indices `1..=q` span the isotropy.
//!
//! ```toml
//! name = "heisenberg"
//! q = 0
//! n = 3
//! bracket = [[1, 2, 3, 1.0]]
//! directions = ["forward", "backward"]
//! horizon = 10.0
//!
//! [integrator]
//! rel_tol = 1e-10
//!
//! [output]
//! checkpoint_stride = 10
//!
//! [expect.backward]
//! verdict = "blowup"
//! time = -0.3333333333333333
//! tolerance = 1e-3
//! ```

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::algebra::{ensure_member, Dimensions, LieBracket, DEFAULT_TOL};
use crate::catalog::{self, CatalogEntry, Expected, DEFAULT_HORIZON};
use crate::error::{Error, Result};
use crate::flow::{Direction, IntegratorOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Catalog(String),
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub direction: Direction,
    pub expected: Expected,
    /// Allowed error on the singular time.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub source: Source,
    pub bracket: LieBracket,
    pub directions: Vec<Direction>,
    pub horizon: f64,
    pub options: IntegratorOptions,
    pub expectations: Vec<Expectation>,
}

const DEFAULT_TIME_TOLERANCE: f64 = 1e-3;

impl Scenario {
    /// A scenario for a catalog entry. Expectations are taken from the
    /// entry where the horizon is long enough to observe them.
    pub fn from_catalog(entry: &CatalogEntry, directions: Vec<Direction>, horizon: Option<f64>) -> Self {
        let horizon = horizon.unwrap_or(DEFAULT_HORIZON);
        let expectations = directions
            .iter()
            .filter_map(|&direction| {
                let expected = entry.expected(direction);
                let observable = match expected {
                    Expected::EternalFlat | Expected::Immortal => true,
                    Expected::Blowup { time: Some(t) } => t.abs() < horizon,
                    Expected::Blowup { time: None } => horizon >= DEFAULT_HORIZON,
                };
                observable.then_some(Expectation {
                    direction,
                    expected,
                    tolerance: DEFAULT_TIME_TOLERANCE,
                })
            })
            .collect();
        Self {
            name: entry.name.to_string(),
            source: Source::Catalog(entry.name.to_string()),
            bracket: entry.bracket.clone(),
            directions,
            horizon,
            options: IntegratorOptions::default(),
            expectations,
        }
    }

    pub fn expectation(&self, direction: Direction) -> Option<&Expectation> {
        self.expectations.iter().find(|e| e.direction == direction)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    catalog: Option<Spanned<String>>,
    q: Option<usize>,
    n: Option<usize>,
    bracket: Option<Vec<Spanned<Vec<toml::Value>>>>,
    directions: Option<Vec<Direction>>,
    horizon: Option<f64>,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    expect: RawExpectations,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    blowup_threshold: Option<f64>,
    max_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    uniform_samples: Option<usize>,
    growth_per_sample: Option<f64>,
    checkpoint_stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpectations {
    forward: Option<RawExpect>,
    backward: Option<RawExpect>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpect {
    verdict: Spanned<String>,
    time: Option<f64>,
    tolerance: Option<f64>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    origin: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn at(&self, span: Range<usize>, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("{}: line {}: {msg}", self.origin, line_of(self.text, span.start)))
    }

    fn plain(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("{}: {msg}", self.origin))
    }
}

fn as_index(v: &toml::Value) -> Option<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok())
}

fn as_real(v: &toml::Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

fn inline_bracket(ctx: &Ctx, raw: &RawScenario) -> Result<LieBracket> {
    let (Some(q), Some(n)) = (raw.q, raw.n) else {
        return Err(ctx.plain("inline scenarios need both `q` and `n`"));
    };
    let dims = Dimensions::new(q, n).map_err(|e| ctx.plain(e))?;
    let d = dims.total();
    let mut triples = Vec::new();
    for entry in raw.bracket.as_deref().unwrap_or_default() {
        let span = entry.span();
        let values = entry.get_ref();
        let parsed = match values.as_slice() {
            [i, j, k, v] => as_index(i)
                .zip(as_index(j))
                .zip(as_index(k))
                .zip(as_real(v))
                .map(|(((i, j), k), v)| (i, j, k, v)),
            _ => None,
        };
        let (i, j, k, v) =
            parsed.ok_or_else(|| ctx.at(span.clone(), "bracket entries are [i, j, k, value]"))?;
        if [i, j, k].iter().any(|&x| x == 0 || x > d) {
            return Err(ctx.at(span, format!("indices are 1-based and at most q + n = {d}")));
        }
        if !v.is_finite() {
            return Err(ctx.at(span, "bracket values must be finite"));
        }
        if i == j && v != 0.0 {
            return Err(ctx.at(span, format!("mu(e{i}, e{i}) must vanish")));
        }
        triples.push((i - 1, j - 1, k - 1, v));
    }
    LieBracket::from_triples(dims, &triples).map_err(|e| ctx.plain(e))
}

fn expectation(ctx: &Ctx, direction: Direction, raw: &RawExpect) -> Result<Expectation> {
    let expected = match raw.verdict.get_ref().as_str() {
        "blowup" => Expected::Blowup { time: raw.time },
        "immortal" | "immortal-to-horizon" => Expected::Immortal,
        "eternal-flat" | "flat" => Expected::EternalFlat,
        other => {
            return Err(ctx.at(
                raw.verdict.span(),
                format!("unknown verdict `{other}` (blowup, immortal, eternal-flat)"),
            ))
        }
    };
    let tolerance = raw.tolerance.unwrap_or(DEFAULT_TIME_TOLERANCE);
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(ctx.plain("expectation tolerance must be positive"));
    }
    Ok(Expectation {
        direction,
        expected,
        tolerance,
    })
}

fn options(ctx: &Ctx, raw: &RawScenario) -> Result<IntegratorOptions> {
    let mut opts = IntegratorOptions::default();
    let positive = |name: &str, v: Option<f64>, slot: &mut f64| -> Result<()> {
        if let Some(v) = v {
            if !v.is_finite() || v <= 0.0 {
                return Err(ctx.plain(format!("`{name}` must be positive and finite")));
            }
            *slot = v;
        }
        Ok(())
    };
    positive("rel_tol", raw.integrator.rel_tol, &mut opts.rel_tol)?;
    positive("abs_tol", raw.integrator.abs_tol, &mut opts.abs_tol)?;
    positive("blowup_threshold", raw.integrator.blowup_threshold, &mut opts.blowup_threshold)?;
    if let Some(m) = raw.integrator.max_steps {
        opts.max_steps = m;
    }
    if let Some(u) = raw.output.uniform_samples {
        if u == 0 {
            return Err(ctx.plain("`uniform_samples` must be at least 1"));
        }
        opts.sampling.uniform_samples = u;
    }
    if let Some(g) = raw.output.growth_per_sample {
        if !g.is_finite() || g <= 1.0 {
            return Err(ctx.plain("`growth_per_sample` must exceed 1"));
        }
        opts.sampling.growth_per_sample = g;
    }
    if let Some(s) = raw.output.checkpoint_stride {
        if s == 0 {
            return Err(ctx.plain("`checkpoint_stride` must be at least 1"));
        }
        opts.sampling.checkpoint_stride = s;
    }
    Ok(opts)
}

/// Parses and validates scenario text. `origin` names the source in errors.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let ctx = Ctx { origin, text };
    let raw: RawScenario = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => ctx.at(span, e.message()),
        None => ctx.plain(e.message()),
    })?;

    let inline_given = raw.q.is_some() || raw.n.is_some() || raw.bracket.is_some();
    let (source, bracket) = match &raw.catalog {
        Some(name) if inline_given => {
            return Err(ctx.at(name.span(), "give either `catalog` or inline `q`, `n`, `bracket`, not both"))
        }
        Some(name) => {
            let entry = catalog::find(name.get_ref()).map_err(|e| ctx.at(name.span(), e))?;
            (Source::Catalog(entry.name.to_string()), entry.bracket)
        }
        None => (Source::Inline, inline_bracket(&ctx, &raw)?),
    };
    ensure_member(&bracket, DEFAULT_TOL)?;

    let horizon = raw.horizon.unwrap_or(DEFAULT_HORIZON);
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(ctx.plain("`horizon` must be positive and finite"));
    }
    let mut directions = raw.directions.clone().unwrap_or_else(|| vec![Direction::Forward]);
    directions.dedup();
    if directions.is_empty() {
        return Err(ctx.plain("`directions` must not be empty"));
    }

    let mut expectations = Vec::new();
    for (direction, exp) in [
        (Direction::Forward, &raw.expect.forward),
        (Direction::Backward, &raw.expect.backward),
    ] {
        if let Some(exp) = exp {
            expectations.push(expectation(&ctx, direction, exp)?);
        }
    }

    Ok(Scenario {
        name: raw.name.clone(),
        source,
        bracket,
        directions,
        horizon,
        options: options(&ctx, &raw)?,
        expectations,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Condition;

    #[test]
    fn catalog_reference() {
        let s = parse_scenario(
            "name = \"s\"\ncatalog = \"su2_round\"\nhorizon = 0.99\ndirections = [\"forward\"]\n",
            "mem",
        )
        .unwrap();
        assert_eq!(s.source, Source::Catalog("su2_round".into()));
        assert_eq!(s.horizon, 0.99);
        assert_eq!(s.bracket, catalog::find("su2_round").unwrap().bracket);
    }

    #[test]
    fn inline_heisenberg_equals_catalog_entry() {
        let s = parse_scenario("name = \"h\"\nq = 0\nn = 3\nbracket = [[1, 2, 3, 1.0]]\n", "mem").unwrap();
        assert_eq!(s.bracket, catalog::find("heisenberg3").unwrap().bracket);
        assert_eq!(s.directions, vec![Direction::Forward]);
    }

    #[test]
    fn integer_values_are_accepted() {
        let s = parse_scenario("name = \"h\"\nq = 0\nn = 3\nbracket = [[1, 2, 3, 1]]\n", "mem").unwrap();
        assert_eq!(s.bracket.get(0, 1, 2), 1.0);
    }

    #[test]
    fn jacobi_violation_is_named() {
        let text = "name = \"bad\"\nq = 0\nn = 3\nbracket = [[1, 2, 3, 1.0], [1, 2, 1, 0.5], [2, 3, 2, 1.0]]\n";
        match parse_scenario(text, "mem") {
            Err(e @ Error::NotMember { condition: Condition::Jacobi, .. }) => {
                assert!(e.to_string().contains("jacobi_residual"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_scenario("name = \"x\"\nq = 0\nn = = 3\n", "mem").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_scenario("name = \"x\"\nq = 0\nn = 3\nbracket = [\n  [1, 2, 3, 1.0],\n  [0, 1, 2, 1.0],\n]\n", "mem")
            .unwrap_err();
        assert!(err.to_string().contains("line 6"), "{err}");
    }

    #[test]
    fn unknown_keys_and_entries_are_rejected() {
        assert!(parse_scenario("name = \"x\"\ncatalog = \"su2_round\"\nhorizn = 1\n", "mem").is_err());
        let err = parse_scenario("name = \"x\"\ncatalog = \"nope\"\n", "mem").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn overrides_and_expectations() {
        let text = r#"
name = "x"
catalog = "heisenberg3"
directions = ["backward"]
horizon = 1.0

[integrator]
rel_tol = 1e-9
max_steps = 1000

[output]
checkpoint_stride = 5

[expect.backward]
verdict = "blowup"
time = -0.3333333333333333
"#;
        let s = parse_scenario(text, "mem").unwrap();
        assert_eq!(s.options.rel_tol, 1e-9);
        assert_eq!(s.options.max_steps, 1000);
        assert_eq!(s.options.sampling.checkpoint_stride, 5);
        let e = s.expectation(Direction::Backward).unwrap();
        assert_eq!(e.tolerance, 1e-3);
        assert!(matches!(e.expected, Expected::Blowup { time: Some(_) }));
    }

    #[test]
    fn catalog_scenarios_drop_unobservable_expectations() {
        let su2 = catalog::find("su2_round").unwrap();
        let short = Scenario::from_catalog(&su2, vec![Direction::Forward], Some(0.5));
        assert!(short.expectations.is_empty());
        let long = Scenario::from_catalog(&su2, vec![Direction::Forward, Direction::Backward], None);
        assert_eq!(long.expectations.len(), 2);
    }
}
