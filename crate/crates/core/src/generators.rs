//! Instance factories: the SAT-reduction family, dictatorships, and seeded
//! random instances for sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::ChoiceInstance;

/// Largest variable count accepted by [`gen_sat`]; the reduction
/// materializes all `2^(v+1)` profiles.
pub const MAX_SAT_VARS: usize = 20;

/// A Boolean formula over variables `x0..x{v-1}` with and/or/not
/// connectives, written in prefix notation: `(and (or x0 (not x1)) x2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Var(usize),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn eval(&self, assignment: &[bool]) -> bool {
        match self {
            BoolExpr::Var(i) => assignment[*i],
            BoolExpr::Not(e) => !e.eval(assignment),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(assignment)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(assignment)),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            BoolExpr::Var(i) => Some(*i),
            BoolExpr::Not(e) => e.max_var(),
            BoolExpr::And(es) | BoolExpr::Or(es) => es.iter().filter_map(|e| e.max_var()).max(),
        }
    }
}

impl std::fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoolExpr::Var(i) => write!(f, "x{i}"),
            BoolExpr::Not(e) => write!(f, "(not {e})"),
            BoolExpr::And(es) => {
                write!(f, "(and")?;
                for e in es {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
            BoolExpr::Or(es) => {
                write!(f, "(or")?;
                for e in es {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanFormula {
    num_vars: usize,
    expr: BoolExpr,
}

impl BooleanFormula {
    /// Parses prefix notation. `num_vars`, when given, may pad the variable
    /// count beyond the largest index mentioned; it must not be smaller.
    pub fn parse(source: &str, num_vars: Option<usize>) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut pos = 0;
        let expr = parse_expr(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Formula(format!(
                "trailing tokens after a complete formula: `{:?}`",
                tokens[pos]
            )));
        }
        let needed = expr.max_var().map_or(0, |m| m + 1);
        let num_vars = match num_vars {
            Some(v) if v < needed => {
                return Err(Error::Formula(format!(
                    "formula mentions x{}, but only {v} variables declared",
                    needed - 1
                )))
            }
            Some(v) => v,
            None => needed,
        };
        if num_vars == 0 {
            return Err(Error::Formula(
                "formula must mention at least one variable".into(),
            ));
        }
        Ok(BooleanFormula { num_vars, expr })
    }

    pub fn new(expr: BoolExpr, num_vars: usize) -> Result<Self> {
        let needed = expr.max_var().map_or(0, |m| m + 1);
        if num_vars < needed.max(1) {
            return Err(Error::Formula(format!(
                "need at least {} variables",
                needed.max(1)
            )));
        }
        Ok(BooleanFormula { num_vars, expr })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn expr(&self) -> &BoolExpr {
        &self.expr
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.expr.eval(assignment)
    }

    /// Brute-force truth-table satisfiability.
    pub fn satisfiable(&self) -> Result<bool> {
        if self.num_vars > MAX_SAT_VARS {
            return Err(Error::GuardExceeded(format!(
                "truth table over {} variables",
                self.num_vars
            )));
        }
        let mut assignment = vec![false; self.num_vars];
        for bits in 0u64..(1u64 << self.num_vars) {
            for (j, slot) in assignment.iter_mut().enumerate() {
                *slot = (bits >> j) & 1 == 1;
            }
            if self.expr.eval(&assignment) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut atom = String::new();
    for ch in source.chars() {
        match ch {
            '(' | ')' => {
                if !atom.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut atom)));
                }
                tokens.push(if ch == '(' { Token::Open } else { Token::Close });
            }
            c if c.is_whitespace() => {
                if !atom.is_empty() {
                    tokens.push(Token::Atom(std::mem::take(&mut atom)));
                }
            }
            c => atom.push(c),
        }
    }
    if !atom.is_empty() {
        tokens.push(Token::Atom(atom));
    }
    if tokens.is_empty() {
        return Err(Error::Formula("empty formula".into()));
    }
    Ok(tokens)
}

fn parse_expr(tokens: &[Token], pos: &mut usize) -> Result<BoolExpr> {
    match tokens.get(*pos) {
        None => Err(Error::Formula("unexpected end of formula".into())),
        Some(Token::Close) => Err(Error::Formula("unexpected `)`".into())),
        Some(Token::Atom(a)) => {
            *pos += 1;
            parse_var(a)
        }
        Some(Token::Open) => {
            *pos += 1;
            let op = match tokens.get(*pos) {
                Some(Token::Atom(a)) => a.clone(),
                _ => return Err(Error::Formula("expected operator after `(`".into())),
            };
            *pos += 1;
            let mut args = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(Token::Close) => {
                        *pos += 1;
                        break;
                    }
                    None => return Err(Error::Formula("missing `)`".into())),
                    _ => args.push(parse_expr(tokens, pos)?),
                }
            }
            match op.as_str() {
                "not" => {
                    if args.len() != 1 {
                        return Err(Error::Formula(format!(
                            "`not` takes exactly one argument, found {}",
                            args.len()
                        )));
                    }
                    Ok(BoolExpr::Not(Box::new(args.pop().unwrap())))
                }
                "and" | "or" => {
                    if args.is_empty() {
                        return Err(Error::Formula(format!(
                            "`{op}` needs at least one argument"
                        )));
                    }
                    Ok(if op == "and" {
                        BoolExpr::And(args)
                    } else {
                        BoolExpr::Or(args)
                    })
                }
                other => Err(Error::Formula(format!("unknown operator `{other}`"))),
            }
        }
    }
}

fn parse_var(atom: &str) -> Result<BoolExpr> {
    let index = atom
        .strip_prefix('x')
        .and_then(|rest| rest.parse::<usize>().ok())
        .ok_or_else(|| Error::Formula(format!("expected a variable like `x0`, found `{atom}`")))?;
    Ok(BoolExpr::Var(index))
}

/// The SAT-reduction instance of a formula over `v` variables: `v + 1`
/// binary agents and outcomes `{0, 1}`.
///
/// Agents `0..v` are the variable agents (utility identically zero);
/// the last agent is the special agent with `u(0, x) = x` and
/// `u(1, x) = 0`. The rule picks outcome 0 whenever the special agent
/// reports 0 and evaluates the formula on the variable agents' reports
/// otherwise. The result is strategy-proof iff the formula is
/// unsatisfiable, and strategy-proof iff OSP-implementable.
pub fn gen_sat(formula: &BooleanFormula) -> Result<ChoiceInstance> {
    let v = formula.num_vars();
    if v > MAX_SAT_VARS {
        return Err(Error::GuardExceeded(format!(
            "{v} variables would need {} profiles",
            1u64 << (v + 1)
        )));
    }
    let n = v + 1;
    let num_profiles = 1usize << n;
    let mut choice = Vec::with_capacity(num_profiles);
    let mut assignment = vec![false; v];
    for idx in 0..num_profiles {
        // last agent fastest: bit 0 is the special agent, the variable
        // agents occupy the higher bits in agent order
        let special = idx & 1;
        for (j, slot) in assignment.iter_mut().enumerate() {
            *slot = (idx >> (n - 1 - j)) & 1 == 1;
        }
        let outcome = if special == 0 {
            0
        } else {
            u32::from(formula.eval(&assignment))
        };
        choice.push(outcome);
    }

    let mut utilities = vec![vec![vec![0i64, 0]; 2]; n];
    utilities[v] = vec![vec![0, 1], vec![0, 0]];

    ChoiceInstance::new(vec![2; n], 2, choice, utilities)
}

/// A dictatorship: agent 0's report alone picks the outcome via
/// `outcome_map`, agent 0 strictly prefers the dictated outcome, and all
/// other agents are indifferent.
pub fn gen_dictatorship(type_sizes: &[u32], outcome_map: &[u32]) -> Result<ChoiceInstance> {
    if type_sizes.is_empty() {
        return Err(Error::Generator("need at least one agent".into()));
    }
    if outcome_map.len() != type_sizes[0] as usize {
        return Err(Error::Generator(format!(
            "outcome map has {} entries but agent 0 has {} types",
            outcome_map.len(),
            type_sizes[0]
        )));
    }
    let num_outcomes = outcome_map.iter().max().unwrap() + 1;
    let num_profiles: usize = type_sizes.iter().map(|&s| s as usize).product();
    let dictator_stride: usize = type_sizes[1..].iter().map(|&s| s as usize).product();

    let choice: Vec<u32> = (0..num_profiles)
        .map(|idx| outcome_map[idx / dictator_stride])
        .collect();

    let mut utilities: Vec<Vec<Vec<i64>>> = type_sizes
        .iter()
        .map(|&s| vec![vec![0i64; num_outcomes as usize]; s as usize])
        .collect();
    for (t, &x) in outcome_map.iter().enumerate() {
        utilities[0][t][x as usize] = 1;
    }

    ChoiceInstance::new(type_sizes.to_vec(), num_outcomes, choice, utilities)
}

/// A seeded uniform-random instance. The generator is pinned: a ChaCha8
/// stream seeded with `seed`, drawing the flat choice table first (profile
/// order) and then the utility tables in `(agent, type, outcome)` order,
/// each payoff uniform on the inclusive range.
pub fn gen_random(
    seed: u64,
    type_sizes: &[u32],
    num_outcomes: u32,
    payoff_min: i64,
    payoff_max: i64,
) -> Result<ChoiceInstance> {
    if payoff_min > payoff_max {
        return Err(Error::Generator(format!(
            "empty payoff range {payoff_min}..={payoff_max}"
        )));
    }
    if type_sizes.is_empty() || num_outcomes == 0 {
        return Err(Error::Generator(
            "need at least one agent and one outcome".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_profiles: usize = type_sizes.iter().map(|&s| s as usize).product();
    let choice: Vec<u32> = (0..num_profiles)
        .map(|_| rng.random_range(0..num_outcomes))
        .collect();
    let utilities: Vec<Vec<Vec<i64>>> = type_sizes
        .iter()
        .map(|&s| {
            (0..s)
                .map(|_| {
                    (0..num_outcomes)
                        .map(|_| rng.random_range(payoff_min..=payoff_max))
                        .collect()
                })
                .collect()
        })
        .collect();
    ChoiceInstance::new(type_sizes.to_vec(), num_outcomes, choice, utilities)
}
