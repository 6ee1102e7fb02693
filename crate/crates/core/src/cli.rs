//! A workspace of relations and rules driven by line commands.
//!
//! ```text
//! load A/1 a.txt          relation A of arity 1
//! load W[2] w.txt         function W with two keys
//! rule C(x) <- A(x), B(x).
//! eval 0
//! delta A a.delta         lines of +<tuple> / -<tuple>
//! maintain 0 [--no-oracle]
//! dump C [--eta]
//! dump-sens 0 | dump-trace 0 | dump-oracle 0 | stats
//! script more.cmds
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::key::{Tuple, Value};
use crate::maintain::{MaintenanceReport, RuleEngine};
use crate::rule::{parse_rule, Plan};
use crate::store::{Relation, Schema};

/// Running totals over all evaluation and maintenance rounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Totals {
    pub evals: u64,
    pub maintains: u64,
    pub ops: u64,
    pub oracle_intervals: u64,
    pub sens_consumed: u64,
    pub sens_added: u64,
    pub head_inserts: u64,
    pub head_erases: u64,
}

impl Totals {
    fn add(&mut self, r: &MaintenanceReport) {
        self.ops += r.ops();
        self.oracle_intervals += r.oracle_intervals;
        self.sens_consumed += r.sens_consumed;
        self.sens_added += r.sens_added;
        self.head_inserts += r.head_inserts;
        self.head_erases += r.head_erases;
    }
}

pub struct Workspace {
    relations: BTreeMap<String, Relation>,
    rules: Vec<RuleEngine>,
    base: PathBuf,
    warnings: Vec<String>,
    page_capacity: usize,
    totals: Totals,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            relations: BTreeMap::new(),
            rules: Vec::new(),
            base: PathBuf::from("."),
            warnings: Vec::new(),
            page_capacity: crate::store::DEFAULT_PAGE_CAPACITY,
            totals: Totals::default(),
        }
    }

    /// Relative file names resolve against `dir`.
    pub fn with_base(dir: impl Into<PathBuf>) -> Self {
        Workspace { base: dir.into(), ..Self::new() }
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn rule(&self, id: usize) -> Option<&RuleEngine> {
        self.rules.get(id)
    }

    pub fn totals(&self) -> Totals {
        self.totals
    }

    /// Warnings produced since the last call.
    pub fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }

    /// Run one command line and return its output.
    pub fn execute(&mut self, line: &str) -> Result<String> {
        let line = line.trim();
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let args: Vec<&str> = rest.split_whitespace().collect();
        match cmd {
            "" => Ok(String::new()),
            "load" => self.load(arg(&args, 0, "load <name>/<arity> <file>")?, arg(&args, 1, "load <name>/<arity> <file>")?),
            "rule" => self.add_rule(rest),
            "eval" => self.eval(self.rule_id(&args)?),
            "delta" => self.delta(arg(&args, 0, "delta <name> <file>")?, arg(&args, 1, "delta <name> <file>")?),
            "maintain" => {
                let no_oracle = args.contains(&"--no-oracle");
                let ids: Vec<&str> = args.iter().copied().filter(|a| *a != "--no-oracle").collect();
                self.maintain(self.rule_id(&ids)?, !no_oracle)
            }
            "dump" => {
                let eta = args.contains(&"--eta");
                let name = args.iter().find(|a| !a.starts_with("--")).ok_or_else(|| usage("dump <name> [--eta]"))?;
                self.dump(name, eta)
            }
            "dump-sens" => {
                let e = &self.rules[self.rule_id(&args)?];
                Ok(e.sensitivities().render(e.plan()))
            }
            "dump-trace" => {
                let e = &self.rules[self.rule_id(&args)?];
                let mut out = String::new();
                for (name, t) in e.last_traces() {
                    let _ = writeln!(out, "# {name}");
                    out.push_str(&t.to_string());
                }
                Ok(out)
            }
            "dump-oracle" => Ok(self.rules[self.rule_id(&args)?].last_oracle().map(|o| o.render()).unwrap_or_default()),
            "stats" => Ok(self.stats()),
            "script" => {
                let path = PathBuf::from(arg(&args, 0, "script <file>")?);
                let mut out = Vec::new();
                let mut warn = Vec::new();
                let r = self.run_file_to(&path, &mut out, &mut warn);
                self.warnings.extend(String::from_utf8_lossy(&warn).lines().map(|l| l.trim_start_matches("warning: ").to_string()));
                r.map(|_| String::from_utf8_lossy(&out).into_owned())
            }
            other => Err(Error::Usage(format!("unknown command {other:?}"))),
        }
    }

    /// Run commands one per line; `#` starts a comment line. Stops at the
    /// first failing command, reporting its line.
    pub fn run_script(&mut self, text: &str) -> Result<String> {
        let mut out = Vec::new();
        let mut warn = Vec::new();
        let r = self.run_script_to(text, &mut out, &mut warn);
        self.warnings.extend(String::from_utf8_lossy(&warn).lines().map(|l| l.trim_start_matches("warning: ").to_string()));
        r.map(|_| String::from_utf8_lossy(&out).into_owned())
    }

    /// As [`Workspace::run_script`], writing each command's output and
    /// warnings as soon as it completes.
    pub fn run_script_to(&mut self, text: &str, out: &mut dyn std::io::Write, warn: &mut dyn std::io::Write) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let r = self.execute(line);
            for w in self.take_warnings() {
                writeln!(warn, "warning: {w}").map_err(io)?;
            }
            match r {
                Ok(s) => out.write_all(s.as_bytes()).map_err(io)?,
                Err(e @ Error::Integrity(_)) => return Err(e),
                Err(e) => return Err(Error::Usage(format!("script line {}: {e}", i + 1))),
            }
        }
        Ok(())
    }

    /// Run a script file; relative names inside it resolve against its
    /// directory.
    pub fn run_file_to(&mut self, path: &Path, out: &mut dyn std::io::Write, warn: &mut dyn std::io::Write) -> Result<()> {
        let path = self.resolve(&path.to_string_lossy());
        let text = read(&path)?;
        let saved = std::mem::replace(&mut self.base, path.parent().map(Path::to_path_buf).unwrap_or_default());
        let r = self.run_script_to(&text, out, warn);
        self.base = saved;
        r
    }

    fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn rule_id(&self, args: &[&str]) -> Result<usize> {
        match args.first() {
            Some(s) => {
                let id: usize = s.parse().map_err(|_| Error::Usage(format!("bad rule id {s:?}")))?;
                if id >= self.rules.len() {
                    return Err(Error::Unknown { kind: "rule", name: s.to_string() });
                }
                Ok(id)
            }
            None if self.rules.len() == 1 => Ok(0),
            None => Err(usage("a rule id is required when more than one rule is installed")),
        }
    }

    fn load(&mut self, target: &str, file: &str) -> Result<String> {
        let schema = parse_target(target)?;
        let text = read(&self.resolve(file))?;
        let tuples = parse_tuples(&text, &schema)?;
        let rel = self
            .relations
            .entry(schema.name.clone())
            .or_insert_with(|| Relation::with_capacity(schema.clone(), self.page_capacity));
        if rel.schema() != &schema {
            return Err(Error::Arity { relation: schema.name, expected: rel.schema().arity, got: schema.arity });
        }
        let mut txn = rel.begin();
        for t in rel.latest().tuples() {
            txn.erase(&t)?;
        }
        for t in tuples {
            txn.insert(t)?;
        }
        let v = rel.commit(txn)?;
        Ok(format!("{}: {} records (version {})\n", schema.name, v.len(), rel.version_number()))
    }

    fn add_rule(&mut self, text: &str) -> Result<String> {
        if text.is_empty() {
            return Err(usage("rule <text>"));
        }
        let rule = parse_rule(text)?;
        let plan = Plan::new(rule, |n| self.relations.get(n).map(|r| r.schema().clone()))?;
        for h in &plan.heads {
            if self.rules.iter().any(|e| e.head(&h.pred).is_some()) {
                return Err(Error::Rule(format!("head {} is already maintained by another rule", h.pred)));
            }
        }
        let names = plan.index_names();
        let mut out = format!("rule {}: {}\n", self.rules.len(), plan.rule);
        let _ = writeln!(out, "indices: {}", if names.is_empty() { "none".to_string() } else { names.join(" ") });
        let mut e = RuleEngine::new(plan);
        e.set_tracing(true);
        self.rules.push(e);
        Ok(out)
    }

    fn current_inputs(&self, id: usize) -> Vec<crate::store::RelationVersion> {
        self.rules[id].plan().atoms.iter().map(|a| self.relations[&a.pred].latest().clone()).collect()
    }

    fn eval(&mut self, id: usize) -> Result<String> {
        let inputs = self.current_inputs(id);
        let r = self.rules[id].bootstrap(inputs)?;
        self.totals.evals += 1;
        self.totals.add(&r);
        Ok(format!("{r}\n"))
    }

    fn maintain(&mut self, id: usize, use_oracle: bool) -> Result<String> {
        let inputs = self.current_inputs(id);
        let r = self.rules[id].maintain(inputs, use_oracle)?;
        self.totals.maintains += 1;
        self.totals.add(&r);
        Ok(format!("{r}\n"))
    }

    fn delta(&mut self, name: &str, file: &str) -> Result<String> {
        let rel = self.relations.get(name).ok_or_else(|| Error::UnknownPredicate(name.to_string()))?;
        let schema = rel.schema().clone();
        let text = read(&self.resolve(file))?;
        let mut erases = Vec::new();
        let mut inserts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (sign, body) = line.split_at(1);
            let t = parse_tuple(body, &schema, i + 1)?;
            match sign {
                "+" => inserts.push(t),
                "-" => erases.push(t),
                _ => return Err(Error::Parse { line: i + 1, msg: "expected a line starting with + or -".into() }),
            }
        }
        let rel = self.relations.get_mut(name).unwrap();
        let mut txn = rel.begin();
        let (mut plus, mut minus) = (0, 0);
        for t in &erases {
            if txn.erase(t)? {
                minus += 1;
            } else {
                self.warnings.push(format!("{name}: erase of absent record {t} ignored"));
            }
        }
        for t in inserts {
            let shown = t.to_string();
            if txn.insert(t)? {
                plus += 1;
            } else {
                self.warnings.push(format!("{name}: record {shown} already present"));
            }
        }
        rel.commit(txn)?;
        Ok(format!("{name}: +{plus} -{minus} (version {})\n", rel.version_number()))
    }

    fn dump(&self, name: &str, eta: bool) -> Result<String> {
        if let Some(r) = self.relations.get(name) {
            return Ok(r.latest().tuples().iter().map(|t| format!("{t}\n")).collect());
        }
        for e in &self.rules {
            if let Some(h) = e.head(name) {
                if !e.is_bootstrapped() {
                    return Err(Error::Usage(format!("{name} is not evaluated yet; run eval first")));
                }
                return Ok(h.render(eta));
            }
        }
        Err(Error::Unknown { kind: "relation or head", name: name.to_string() })
    }

    fn stats(&self) -> String {
        let mut out = String::new();
        for (name, r) in &self.relations {
            let _ = writeln!(out, "relation {name} records={} version={}", r.latest().len(), r.version_number());
        }
        for (i, e) in self.rules.iter().enumerate() {
            let heads: Vec<String> = e.heads().iter().map(|h| format!("{}={}", h.name(), h.version().len())).collect();
            let _ = writeln!(out, "rule {i} evaluated={} sens={} heads: {}", e.is_bootstrapped(), e.sensitivities().len(), heads.join(" "));
        }
        let t = self.totals;
        let _ = writeln!(out, "evals={}", t.evals);
        let _ = writeln!(out, "maintains={}", t.maintains);
        let _ = writeln!(out, "ops={}", t.ops);
        let _ = writeln!(out, "oracle_intervals={}", t.oracle_intervals);
        let _ = writeln!(out, "sens_consumed={}", t.sens_consumed);
        let _ = writeln!(out, "sens_added={}", t.sens_added);
        let _ = writeln!(out, "head_inserts={}", t.head_inserts);
        let _ = writeln!(out, "head_erases={}", t.head_erases);
        out
    }
}

fn usage(s: &str) -> Error {
    Error::Usage(format!("usage: {s}"))
}

fn arg<'a>(args: &[&'a str], i: usize, u: &str) -> Result<&'a str> {
    args.get(i).copied().ok_or_else(|| usage(u))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `A/2` declares a relation, `F[2]` a function with two keys.
pub fn parse_target(s: &str) -> Result<Schema> {
    let bad = || Error::Usage(format!("expected <name>/<arity> or <name>[<arity>], got {s:?}"));
    if let Some((name, n)) = s.split_once('/') {
        let n: usize = n.parse().map_err(|_| bad())?;
        return valid_name(name).then(|| Schema::relation(name, n)).ok_or_else(bad);
    }
    if let Some((name, n)) = s.strip_suffix(']').and_then(|s| s.split_once('[')) {
        let n: usize = n.parse().map_err(|_| bad())?;
        return valid_name(name).then(|| Schema::function(name, n)).ok_or_else(bad);
    }
    Err(bad())
}

fn valid_name(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic() || f == '_') && c.all(|x| x.is_ascii_alphanumeric() || x == '_')
}

/// One record per line, fields separated by whitespace; functions carry
/// their value last. Blank lines and `#` comments are skipped.
pub fn parse_tuples(text: &str, schema: &Schema) -> Result<Vec<Tuple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_tuple(line, schema, i + 1)?);
    }
    Ok(out)
}

fn parse_tuple(line: &str, schema: &Schema, n: usize) -> Result<Tuple> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let want = schema.arity + usize::from(schema.functional);
    if fields.len() != want {
        return Err(Error::Parse { line: n, msg: format!("{} expects {want} fields, found {}", schema.name, fields.len()) });
    }
    let keys = fields[..schema.arity]
        .iter()
        .map(|f| f.parse::<i64>().map_err(|_| Error::Parse { line: n, msg: format!("bad key {f:?}") }))
        .collect::<Result<Vec<_>>>()?;
    let value = if schema.functional {
        let f = fields[schema.arity];
        let v: Value = f.parse().map_err(|_| Error::Parse { line: n, msg: format!("bad value {f:?}") })?;
        if let Value::Float(x) = v {
            if !x.is_finite() {
                return Err(Error::Parse { line: n, msg: format!("non-finite value {f:?}") });
            }
        }
        Some(v)
    } else {
        None
    };
    Ok(Tuple { keys, value })
}

/// Exit status for a failed command: 2 for integrity errors, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_integrity() {
        2
    } else {
        1
    }
}
