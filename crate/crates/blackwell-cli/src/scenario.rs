//! Scenario files: a TOML schema describing one experiment, strict
//! validation, and construction of the runnable problem.
//!
//! Every field the simulator honors appears in [`ScenarioFile`]; unknown
//! keys are rejected so a typo cannot silently change an experiment. The
//! normalized echo of a parsed file (defaults materialized) parses back to
//! the identical in-memory value.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use blackwell::approach::{Problem, ResponseOracle, Target, Variant};
use blackwell::games::{expected_reward, MixedAction, VectorGame};
use blackwell::harness::{Algorithm, Inject, OpponentStrategy, RunSpec};
use blackwell::regret::{
    build_blackwell_embedding, build_constrained, build_external_game, build_global_cost,
    build_internal_game, build_ratio, CostFunctional, CostedGame,
};
use blackwell::sets::TargetSet;

/// The only step/sweep schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A scenario configuration error with enough context to fix the file.
#[derive(Debug)]
pub struct ScenarioError(pub String);

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ScenarioError {}

impl From<blackwell::Error> for ScenarioError {
    fn from(e: blackwell::Error) -> Self {
        ScenarioError(e.to_string())
    }
}

type SResult<T> = Result<T, ScenarioError>;

fn default_checkpoints() -> Vec<u64> {
    vec![10, 100, 1000, 10_000]
}

fn default_delta() -> f64 {
    0.1
}

/// One experiment, as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub id: String,
    pub algorithm: String,
    pub n_steps: u64,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub problem: ProblemSpec,
    pub opponent: OpponentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<InjectSpec>,
}

/// Problem description: a construction kind tag plus its matrices, or an
/// inline vector game with a geometric target and a response rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseSpec>,
}

/// Geometric set description shared by generic targets and constraint sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Response rule for inline generic games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSpec {
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpponentSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
}

/// Deliberate corruption of each planned target point, used by negative
/// fixtures to prove the runtime certification guard fires.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectSpec {
    pub from_step: u64,
    pub r_star_offset: Vec<f64>,
}

/// A validated scenario, ready to run.
pub struct BuiltScenario {
    pub file: ScenarioFile,
    pub problem: Problem,
    pub algorithm: Algorithm,
    pub opponent: OpponentStrategy,
    pub inject: Option<Inject>,
}

impl BuiltScenario {
    /// Borrowing view the harness consumes.
    pub fn run_spec(&self) -> RunSpec<'_> {
        RunSpec {
            scenario_id: self.file.id.clone(),
            problem: &self.problem,
            algorithm: self.algorithm.clone(),
            opponent: self.opponent.clone(),
            n_steps: self.file.n_steps,
            delta: self.file.delta,
            inject: self.inject.clone(),
        }
    }
}

/// Reads and parses a scenario file; the error names the file and, for
/// syntax problems, the offending line.
pub fn load(path: &Path) -> SResult<ScenarioFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| ScenarioError(format!("{}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| ScenarioError(format!("{}: {e}", path.display())))
}

/// Parses scenario TOML. Unknown keys anywhere are an error.
pub fn parse_str(text: &str) -> SResult<ScenarioFile> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError(e.to_string()))?;
    check_file(&file)?;
    Ok(file)
}

/// Re-emits a parsed scenario with all defaults materialized. Parsing the
/// echo yields a value equal to the input.
pub fn to_normalized_toml(file: &ScenarioFile) -> SResult<String> {
    toml::to_string_pretty(file).map_err(|e| ScenarioError(e.to_string()))
}

fn check_file(file: &ScenarioFile) -> SResult<()> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError(format!(
            "schema_version {} unsupported (this build reads {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if file.id.is_empty()
        || !file
            .id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(ScenarioError(format!(
            "id {:?} must be nonempty and limited to [A-Za-z0-9_-]",
            file.id
        )));
    }
    if !(file.delta > 0.0 && file.delta < 1.0) {
        return Err(ScenarioError(format!(
            "delta {} must lie strictly between 0 and 1",
            file.delta
        )));
    }
    Ok(())
}

impl ScenarioFile {
    /// Validates every cross-field constraint and builds the problem,
    /// algorithm, and opponent. This is configuration-level validation;
    /// oracle certification probing happens in the harness.
    pub fn build(&self) -> SResult<BuiltScenario> {
        let algorithm = parse_algorithm(&self.algorithm)?;
        let problem = self.problem.build()?;
        let opponent = self.opponent.build(&self.problem)?;
        let inject = self.inject.as_ref().map(|spec| Inject {
            from_step: spec.from_step,
            offset: spec.r_star_offset.clone(),
        });
        Ok(BuiltScenario {
            file: self.clone(),
            problem,
            algorithm,
            opponent,
            inject,
        })
    }
}

fn parse_algorithm(tag: &str) -> SResult<Algorithm> {
    Ok(match tag {
        "response-based" => Algorithm::ResponseBased(Variant::Smoothed),
        "response-based+idling" => Algorithm::ResponseBased(Variant::Idling),
        "response-based+unbounded" => Algorithm::ResponseBased(Variant::Unbounded),
        "response-based-realized" => Algorithm::ResponseBased(Variant::Realized),
        "primal-blackwell" => Algorithm::PrimalBlackwell,
        "ogd-support" => Algorithm::OgdSupport,
        other => {
            return Err(ScenarioError(format!(
                "unknown algorithm {other:?}; expected response-based, \
                 response-based+idling, response-based+unbounded, \
                 response-based-realized, primal-blackwell, or ogd-support"
            )))
        }
    })
}

impl ProblemSpec {
    fn build(&self) -> SResult<Problem> {
        let provided = [
            ("u", self.u.is_some()),
            ("c", self.c.is_some()),
            ("d", self.d.is_some()),
            ("payoff", self.payoff.is_some()),
            ("target", self.target.is_some()),
            ("gamma", self.gamma.is_some()),
            ("response", self.response.is_some()),
        ];
        let allowed: &[&str] = match self.kind.as_str() {
            "external" | "internal" | "blackwell" | "global-abs" | "global-infnorm" => &["u"],
            "global-dnorm" => &["u", "d"],
            "ratio" => &["u", "c"],
            "constrained" => &["u", "c", "gamma"],
            "generic-vector" => &["payoff", "target", "response"],
            other => {
                return Err(ScenarioError(format!(
                    "unknown problem kind {other:?}; expected external, internal, \
                     blackwell, global-abs, global-dnorm, global-infnorm, ratio, \
                     constrained, or generic-vector"
                )))
            }
        };
        for (name, present) in provided {
            if present && !allowed.contains(&name) {
                return Err(ScenarioError(format!(
                    "problem field {name:?} is not used by kind {:?}",
                    self.kind
                )));
            }
        }

        let want = |field: &Option<Vec<Vec<f64>>>, name: &str| -> SResult<Vec<Vec<f64>>> {
            field.clone().ok_or_else(|| {
                ScenarioError(format!("kind {:?} needs problem field {name:?}", self.kind))
            })
        };
        Ok(match self.kind.as_str() {
            "external" => build_external_game(&want(&self.u, "u")?)?,
            "internal" => build_internal_game(&want(&self.u, "u")?)?,
            "blackwell" => build_blackwell_embedding(&want(&self.u, "u")?)?,
            "global-abs" => {
                build_global_cost(CostFunctional::AbsoluteValue, &want(&self.u, "u")?)?
            }
            "global-dnorm" => {
                let d = self.d.ok_or_else(|| {
                    ScenarioError("kind \"global-dnorm\" needs problem field \"d\"".into())
                })?;
                build_global_cost(CostFunctional::DNorm { d }, &want(&self.u, "u")?)?
            }
            "global-infnorm" => {
                build_global_cost(CostFunctional::InfNorm, &want(&self.u, "u")?)?
            }
            "ratio" => build_ratio(&want(&self.u, "u")?, &want(&self.c, "c")?)?,
            "constrained" => {
                let gamma = self
                    .gamma
                    .as_ref()
                    .ok_or_else(|| {
                        ScenarioError("kind \"constrained\" needs problem field \"gamma\"".into())
                    })?
                    .to_set()?;
                let costed = CostedGame::scalar(want(&self.u, "u")?, want(&self.c, "c")?)?;
                build_constrained(costed, gamma)?
            }
            "generic-vector" => self.build_generic()?,
            _ => unreachable!("kind checked above"),
        })
    }

    fn build_generic(&self) -> SResult<Problem> {
        let tensor = self.payoff.clone().ok_or_else(|| {
            ScenarioError("kind \"generic-vector\" needs problem field \"payoff\"".into())
        })?;
        let set = self
            .target
            .as_ref()
            .ok_or_else(|| {
                ScenarioError("kind \"generic-vector\" needs problem field \"target\"".into())
            })?
            .to_set()?;
        let response = self.response.as_ref().ok_or_else(|| {
            ScenarioError("kind \"generic-vector\" needs problem field \"response\"".into())
        })?;
        let game = VectorGame::new(tensor)?;
        let oracle = response.to_oracle(&game, &set)?;
        Ok(Problem::new(game, Target::Set(set), oracle)?)
    }
}

impl SetSpec {
    /// Builds the geometric set this description names.
    pub fn to_set(&self) -> SResult<TargetSet> {
        let need = |cond: bool, what: &str| -> SResult<()> {
            if cond {
                Ok(())
            } else {
                Err(ScenarioError(format!(
                    "set kind {:?} needs field {what:?}",
                    self.kind
                )))
            }
        };
        let allowed: &[&str] = match self.kind.as_str() {
            "singleton" => &["point"],
            "ball" => &["center", "radius"],
            "box" => &["lower", "upper"],
            "nonpositive-orthant" => &["dim"],
            "hpolyhedron" => &["a", "b"],
            other => {
                return Err(ScenarioError(format!(
                    "unknown set kind {other:?}; expected singleton, ball, box, \
                     nonpositive-orthant, or hpolyhedron"
                )))
            }
        };
        let provided = [
            ("point", self.point.is_some()),
            ("center", self.center.is_some()),
            ("radius", self.radius.is_some()),
            ("lower", self.lower.is_some()),
            ("upper", self.upper.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("dim", self.dim.is_some()),
        ];
        for (name, present) in provided {
            if present && !allowed.contains(&name) {
                return Err(ScenarioError(format!(
                    "set field {name:?} is not used by kind {:?}",
                    self.kind
                )));
            }
        }
        Ok(match self.kind.as_str() {
            "singleton" => {
                need(self.point.is_some(), "point")?;
                TargetSet::singleton(self.point.clone().unwrap())?
            }
            "ball" => {
                need(self.center.is_some(), "center")?;
                need(self.radius.is_some(), "radius")?;
                TargetSet::ball(self.center.clone().unwrap(), self.radius.unwrap())?
            }
            "box" => {
                need(self.lower.is_some(), "lower")?;
                need(self.upper.is_some(), "upper")?;
                TargetSet::box_bounds(self.lower.clone().unwrap(), self.upper.clone().unwrap())?
            }
            "nonpositive-orthant" => {
                need(self.dim.is_some(), "dim")?;
                TargetSet::nonpositive_orthant(self.dim.unwrap())?
            }
            "hpolyhedron" => {
                need(self.a.is_some(), "a")?;
                need(self.b.is_some(), "b")?;
                TargetSet::hpolyhedron(self.a.clone().unwrap(), self.b.clone().unwrap())?
            }
            _ => unreachable!("kind checked above"),
        })
    }
}

impl ResponseSpec {
    fn to_oracle(&self, game: &VectorGame, set: &TargetSet) -> SResult<ResponseOracle> {
        match self.rule.as_str() {
            "constant" => {
                let probs = self.probs.clone().ok_or_else(|| {
                    ScenarioError("response rule \"constant\" needs field \"probs\"".into())
                })?;
                let p = MixedAction::new(probs)?;
                if p.len() != game.n_agent() {
                    return Err(ScenarioError(format!(
                        "constant response has {} entries for a {}-action game",
                        p.len(),
                        game.n_agent()
                    )));
                }
                Ok(ResponseOracle::new(move |_q| Ok(p.clone())))
            }
            "pure-best" => {
                if self.probs.is_some() {
                    return Err(ScenarioError(
                        "response rule \"pure-best\" takes no \"probs\"".into(),
                    ));
                }
                let game = game.clone();
                let set = set.clone();
                Ok(ResponseOracle::new(move |q| {
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for a in 0..game.n_agent() {
                        let r = expected_reward(&game, &MixedAction::pure(a, game.n_agent()), q)?;
                        let d = set.distance(&r)?;
                        if d < best_d {
                            best = a;
                            best_d = d;
                        }
                    }
                    Ok(MixedAction::pure(best, game.n_agent()))
                }))
            }
            other => Err(ScenarioError(format!(
                "unknown response rule {other:?}; expected constant or pure-best"
            ))),
        }
    }
}

impl OpponentSpec {
    fn build(&self, problem: &ProblemSpec) -> SResult<OpponentStrategy> {
        let allowed: &[&str] = match self.kind.as_str() {
            "fixed-mixed" => &["q"],
            "periodic-pure" => &["sequence"],
            "adversarial-omniscient" => &[],
            "best-response-empirical" => &["u"],
            other => {
                return Err(ScenarioError(format!(
                    "unknown opponent kind {other:?}; expected fixed-mixed, \
                     periodic-pure, adversarial-omniscient, or best-response-empirical"
                )))
            }
        };
        let provided = [
            ("q", self.q.is_some()),
            ("sequence", self.sequence.is_some()),
            ("u", self.u.is_some()),
        ];
        for (name, present) in provided {
            if present && !allowed.contains(&name) {
                return Err(ScenarioError(format!(
                    "opponent field {name:?} is not used by kind {:?}",
                    self.kind
                )));
            }
        }
        Ok(match self.kind.as_str() {
            "fixed-mixed" => {
                let q = self.q.clone().ok_or_else(|| {
                    ScenarioError("opponent kind \"fixed-mixed\" needs field \"q\"".into())
                })?;
                OpponentStrategy::FixedMixed(MixedAction::new(q)?)
            }
            "periodic-pure" => {
                let seq = self.sequence.clone().ok_or_else(|| {
                    ScenarioError(
                        "opponent kind \"periodic-pure\" needs field \"sequence\"".into(),
                    )
                })?;
                OpponentStrategy::PeriodicPure(seq)
            }
            "adversarial-omniscient" => OpponentStrategy::AdversarialOmniscient,
            "best-response-empirical" => {
                // The tracked utility defaults to the problem's own scalar
                // matrix where the kind has one.
                let u = match (&self.u, scalar_utility_of(problem)) {
                    (Some(u), _) => u.clone(),
                    (None, Some(u)) => u,
                    (None, None) => {
                        return Err(ScenarioError(format!(
                            "opponent kind \"best-response-empirical\" needs field \"u\" \
                             because problem kind {:?} has no scalar utility",
                            problem.kind
                        )))
                    }
                };
                OpponentStrategy::BestResponseToEmpirical { u }
            }
            _ => unreachable!("kind checked above"),
        })
    }
}

/// The scalar utility matrix a construction kind is built on, when it has
/// one. Load-balancing matrices are loads, not utilities, so they do not
/// qualify.
fn scalar_utility_of(problem: &ProblemSpec) -> Option<Vec<Vec<f64>>> {
    match problem.kind.as_str() {
        "external" | "internal" | "blackwell" | "global-abs" | "ratio" | "constrained" => {
            problem.u.clone()
        }
        _ => None,
    }
}
