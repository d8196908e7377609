//! Subcommand implementations. Each returns a [`Document`] and an exit code.

use std::fmt::Write as _;

use clap::{Subcommand, ValueEnum};
use milnor_core::expansion::Expansion;
use milnor_core::freegroup::{longitudes, milnor_level, tuple_level, LongitudeTupleFile};
use milnor_core::koszul::{homology, DegreeDims};
use milnor_core::lie::{d_dimension, HTensorLie};
use milnor_core::linalg::PivotOrder;
use milnor_core::milnor::{
    art_theta, art_theta_braid, check_filtration, milnor_degree_k, total_milnor, truncated_milnor, LinkData,
};
use milnor_core::morita::{commutative_diagram, d2_composition, morita_milnor_with, sigma, MoritaInput};
use milnor_core::rational::to_short;
use milnor_core::trees::{enumerate_trees, eta_inverse, TreeCombination};
use milnor_core::{Error, Q};
use serde::Serialize;
use serde_json::{json, Value};

use crate::job::{CliError, CliResult, ExpansionChoice, Format, JobConfig, EXIT_INTERNAL, EXIT_PRECONDITION};

/// Seeds of the randomized expansions compared by `verify`.
pub const VERIFY_SEEDS: [u64; 2] = [11, 29];

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Total, degree-k, or truncated Milnor invariant.
    Milnor {
        #[arg(long, value_enum, default_value_t = Kind::Total)]
        kind: Kind,
    },
    /// Longitude words of the input.
    Longitudes,
    /// Largest k with the input in filtration level k.
    Level {
        #[arg(long = "max-k", default_value_t = 6)]
        max_k: usize,
    },
    /// Build or check a special expansion.
    Expansion {
        #[command(subcommand)]
        action: ExpansionAction,
    },
    /// Tree diagrams of the truncated invariant, or all trees of one degree.
    Trees {
        /// Enumerate canonical trees of this degree instead.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Dimension table of H_p of the free nilpotent Lie algebra L / L_{>= k}.
    Homology {
        #[arg(long, default_value_t = 3)]
        p: usize,
    },
    /// Infinitesimal Morita–Milnor class and the commutative-diagram check.
    Morita,
    /// Runs every structural check on one input.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Total,
    Degree,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum ExpansionAction {
    /// Emit the selected special expansion as JSON.
    Build,
    /// Report whether the selected expansion is special.
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Milnor { .. } => "milnor",
            Command::Longitudes => "longitudes",
            Command::Level { .. } => "level",
            Command::Expansion { action: ExpansionAction::Build } => "expansion-build",
            Command::Expansion { action: ExpansionAction::Check } => "expansion-check",
            Command::Trees { .. } => "trees",
            Command::Homology { .. } => "homology",
            Command::Morita => "morita",
            Command::Verify => "verify",
        }
    }
}

/// Rendered output of one job.
#[derive(Debug, Clone)]
pub struct Document {
    pub json: Value,
    pub text: String,
    pub dot: Option<String>,
    /// Extra files for the output directory: `(name, contents)`.
    pub files: Vec<(String, String)>,
    pub exit_code: i32,
}

impl Document {
    fn new(json: Value, text: String) -> Self {
        Document { json, text, dot: None, files: Vec::new(), exit_code: 0 }
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Text => Ok(self.text.clone()),
            Format::Json => Ok(serde_json::to_string_pretty(&self.json).expect("serializable") + "\n"),
            Format::Dot => {
                self.dot.clone().ok_or_else(|| CliError::Usage("--format dot is only available for `trees`".into()))
            }
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn render_by_degree(mu: &HTensorLie, out: &mut String) {
    let top = mu.top_degree().unwrap_or(0);
    if mu.is_zero() {
        out.push_str("0\n");
    }
    for d in 1..=top {
        let part = mu.degree_part(d);
        if part.is_zero() {
            continue;
        }
        let _ = writeln!(out, "degree {d}:");
        for (i, y) in part.entries().iter().enumerate() {
            if !y.is_zero() {
                let _ = writeln!(out, "  X{} ⊗ ({})", i + 1, y.render_inline());
            }
        }
    }
}

fn in_d_by_degree(mu: &HTensorLie, lo: usize, hi: usize) -> CliResult<Vec<(usize, bool)>> {
    (lo..=hi).map(|d| Ok((d, mu.degree_part(d).in_d()?))).collect()
}

pub fn run(cmd: &Command, job: &JobConfig) -> CliResult<Document> {
    match cmd {
        Command::Milnor { kind } => milnor(job, *kind),
        Command::Longitudes => longitudes_cmd(job),
        Command::Level { max_k } => level(job, *max_k),
        Command::Expansion { action: ExpansionAction::Build } => expansion_build(job),
        Command::Expansion { action: ExpansionAction::Check } => expansion_check(job),
        Command::Trees { degree: Some(l) } => trees_enumerate(job, *l),
        Command::Trees { degree: None } => trees(job),
        Command::Homology { p } => homology_cmd(job, *p),
        Command::Morita => morita(job),
        Command::Verify => verify(job),
    }
}

fn milnor(job: &JobConfig, kind: Kind) -> CliResult<Document> {
    let k = job.k;
    let link = job.link()?;
    let (trunc, mu, checked) = match kind {
        Kind::Total => {
            let t = job.truncation.unwrap_or(2 * k + 1);
            (t, total_milnor(link, &job.theta(t)?, t)?, None)
        }
        Kind::Degree => {
            let t = job.truncation_at_least(k + 1)?;
            (t, milnor_degree_k(link, &job.theta(t)?, k)?, Some((k, k)))
        }
        Kind::Truncated => {
            let t = job.truncation_at_least(2 * k)?;
            (t, truncated_milnor(link, &job.theta(t)?, k)?, Some((k, 2 * k - 1)))
        }
    };
    let header = job.header("milnor", Some(trunc));
    let in_d = match checked {
        Some((lo, hi)) => in_d_by_degree(&mu, lo, hi)?,
        None => Vec::new(),
    };
    let mut text = format!("{header}\n");
    render_by_degree(&mu, &mut text);
    for (d, ok) in &in_d {
        let _ = writeln!(text, "in D_{d}(H): {ok}");
    }
    let mut json = json!({
        "header": to_value(&header),
        "kind": to_value(&kind_name(kind)),
        "entries": to_value(&mu.to_entries()),
    });
    if checked.is_some() {
        json["inD"] = in_d.iter().map(|(d, ok)| json!({"degree": d, "inD": ok})).collect();
    }
    Ok(Document::new(json, text))
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Total => "total",
        Kind::Degree => "degree",
        Kind::Truncated => "truncated",
    }
}

fn longitudes_cmd(job: &JobConfig) -> CliResult<Document> {
    let tuple = job.link()?.longitudes()?;
    let header = job.header("longitudes", None);
    let mut text = format!("{header}\n");
    for (i, y) in tuple.words().iter().enumerate() {
        let _ = writeln!(text, "y{} = {y}", i + 1);
    }
    let file: LongitudeTupleFile = tuple.to_file();
    let mut json = to_value(&file);
    json["header"] = to_value(&header);
    Ok(Document::new(json, text))
}

fn level(job: &JobConfig, max_k: usize) -> CliResult<Document> {
    if max_k == 0 {
        return Err(CliError::Usage("--max-k must be >= 1".into()));
    }
    let level = match job.link()? {
        LinkData::Braid(b) => milnor_level(b, max_k)?,
        LinkData::Tuple(t) => tuple_level(t, max_k),
    };
    let header = job.header("level", None);
    let capped = level == max_k;
    let text = format!("{header}\nlevel = {level}{}\n", if capped { " (capped)" } else { "" });
    let json = json!({ "header": to_value(&header), "maxK": max_k, "level": level, "capped": capped });
    Ok(Document::new(json, text))
}

fn expansion_build(job: &JobConfig) -> CliResult<Document> {
    let trunc = match &job.expansion {
        ExpansionChoice::File { file, .. } => job.truncation.unwrap_or(file.truncation),
        _ => job.truncation.unwrap_or(2 * job.k + 1),
    };
    let theta = job.theta(trunc)?;
    let header = job.header("expansion-build", Some(trunc));
    let mut text = format!("{header}\n");
    for i in 1..=theta.n() {
        let _ = writeln!(text, "log U{i} = {}", theta.log_u(i).render_inline());
    }
    let mut json = to_value(&theta.theta().to_file());
    json["header"] = to_value(&header);
    Ok(Document::new(json, text))
}

fn expansion_check(job: &JobConfig) -> CliResult<Document> {
    let theta: Expansion = match &job.expansion {
        ExpansionChoice::File { file, .. } => Expansion::from_file(file)?,
        _ => job.raw_expansion(job.truncation.unwrap_or(2 * job.k + 1))?,
    };
    let report = theta.check_special();
    let header = job.header("expansion-check", Some(theta.truncation()));
    let mut text = format!(
        "{header}\ngrouplike: {}\ntangential: {}\nnormalized: {}\nspecial: {}\n",
        report.grouplike,
        report.tangential,
        report.normalized,
        report.is_special(),
    );
    if let Some(d) = report.first_failing_degree {
        let _ = writeln!(text, "first failing degree: {d}");
    }
    if !report.diagnostic.is_empty() {
        let _ = writeln!(text, "{}", report.diagnostic);
    }
    let json = json!({
        "header": to_value(&header),
        "grouplike": report.grouplike,
        "tangential": report.tangential,
        "normalized": report.normalized,
        "special": report.is_special(),
        "firstFailingDegree": report.first_failing_degree,
        "diagnostic": report.diagnostic,
    });
    let mut doc = Document::new(json, text);
    if !report.is_special() {
        doc.exit_code = EXIT_PRECONDITION;
    }
    Ok(doc)
}

fn trees_enumerate(job: &JobConfig, l: usize) -> CliResult<Document> {
    let n = job.n()?;
    let list = enumerate_trees(n, l)?;
    let header = job.header("trees", None);
    let mut text = format!("{header}\n{} trees of degree {l} on {n} colors\n", list.len());
    let mut dot = String::new();
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (idx, t) in list.iter().enumerate() {
        let name = format!("tree_{l}_{idx}");
        let (root, shape) = t.planar();
        let _ = writeln!(text, "{idx}: {t}");
        let g = t.to_dot(&name);
        dot.push_str(&g);
        files.push((format!("{name}.dot"), g));
        rows.push(json!({"index": idx, "root": root, "shape": shape.to_string(), "leafColors": t.leaf_colors()}));
    }
    let json = json!({ "header": to_value(&header), "degree": l, "count": list.len(), "trees": rows });
    let mut doc = Document::new(json, text);
    doc.dot = Some(dot);
    doc.files = files;
    Ok(doc)
}

fn dot_for(comb: &TreeCombination) -> (String, Vec<(String, String)>) {
    let mut dot = String::new();
    let mut files = Vec::new();
    for (idx, (t, c)) in comb.terms().enumerate() {
        let name = format!("term_{idx}");
        let g = format!("// coefficient {}\n{}", to_short(c), t.to_dot(&name));
        dot.push_str(&g);
        files.push((format!("{name}.dot"), g));
    }
    (dot, files)
}

fn render_trees(comb: &TreeCombination, out: &mut String) {
    if comb.is_zero() {
        out.push_str("0\n");
    }
    for (t, c) in comb.terms() {
        let _ = writeln!(out, "{} * {t}", to_short(c));
    }
}

fn trees(job: &JobConfig) -> CliResult<Document> {
    let k = job.k;
    let trunc = job.truncation_at_least(2 * k)?;
    let mu = truncated_milnor(job.link()?, &job.theta(trunc)?, k)?;
    let comb = eta_inverse(&mu)?;
    let back = comb.eta(mu.n(), 2 * k - 1)?;
    if back != mu.retruncate(2 * k - 1) {
        return Err(Error::Internal("η(η^-1(μ)) differs from μ".into()).into());
    }
    let header = job.header("trees", Some(trunc));
    let mut text = format!("{header}\n");
    render_trees(&comb, &mut text);
    let (dot, files) = dot_for(&comb);
    let json = json!({ "header": to_value(&header), "terms": to_value(&comb.to_json()) });
    let mut doc = Document::new(json, text);
    doc.dot = Some(dot);
    doc.files = files;
    Ok(doc)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HomologyRow {
    #[serde(flatten)]
    dims: DegreeDims,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim_d: Option<usize>,
}

fn homology_cmd(job: &JobConfig, p: usize) -> CliResult<Document> {
    let n = job.n()?;
    let k = job.k;
    if k < 2 {
        return Err(CliError::Usage("homology needs --k >= 2 (the quotient L / L_{>= k})".into()));
    }
    let h = homology(p, n, k - 1)?;
    let header = job.header("homology", None);
    let rows: Vec<HomologyRow> = h
        .dims()
        .into_iter()
        .map(|dims| {
            let dim_d = (p == 3).then(|| d_dimension(n, dims.degree - 1));
            HomologyRow { dims, dim_d }
        })
        .collect();
    let mut text = format!("{header}\nH_{p} of L / L_(>= {k}), fingerprint {}\n", h.fingerprint());
    text.push_str("degree  chains  kernel  image  homology");
    if p == 3 {
        text.push_str("  dim D");
    }
    text.push('\n');
    for r in &rows {
        let _ = write!(
            text,
            "{:>6}  {:>6}  {:>6}  {:>5}  {:>8}",
            r.dims.degree, r.dims.dim_chains, r.dims.dim_kernel, r.dims.dim_image, r.dims.dim_homology
        );
        if let Some(d) = r.dim_d {
            let _ = write!(text, "  {d:>5}");
        }
        text.push('\n');
    }
    let _ = writeln!(text, "total {}", h.dim());
    let mut json = json!({
        "header": to_value(&header),
        "p": p,
        "class": k - 1,
        "fingerprint": h.fingerprint(),
        "total": h.dim(),
        "rows": to_value(&rows),
    });
    if p == 3 {
        let expected: usize = (k..=2 * k - 2).map(|l| d_dimension(n, l)).sum();
        let _ = writeln!(text, "sum of dim D_l for l in [{k}, {}]: {expected}", 2 * k - 2);
        json["dimensionCheck"] = json!({ "expected": expected, "matches": expected == h.dim() });
    }
    Ok(Document::new(json, text))
}

fn morita(job: &JobConfig) -> CliResult<Document> {
    let k = job.k;
    if let Some(t) = job.truncation {
        if t < 2 * k + 1 {
            return Err(Error::Precondition(format!("morita needs --N >= {}, got {t}", 2 * k + 1)).into());
        }
    }
    let trunc = job.truncation.unwrap_or(0).max(MoritaInput::required_truncation(k));
    let input = MoritaInput::new(job.link()?, &job.theta(trunc)?, k)?;
    let check = commutative_diagram(&input)?;
    let reverse = morita_milnor_with(&input, PivotOrder::Reverse)?;
    let d2 = d2_composition(&check.morita)?;
    let mu = input.milnor().degree_part(k + 1).retruncate(k + 1);
    let pivot_independent = reverse == check.morita;
    let d2_matches = d2 == mu;
    let report = check.report();
    let header = job.header("morita", Some(trunc));
    let mut text = format!("{header}\nfingerprint {}\n", report.fingerprint);
    let _ = writeln!(text, "class: [{}]", report.morita.join(", "));
    let _ = writeln!(text, "via trees: [{}]", report.via_trees.join(", "));
    let _ = writeln!(text, "diagram commutes: {}", report.commutes);
    let _ = writeln!(text, "independent of the bounding chain: {pivot_independent}");
    let _ = writeln!(text, "d2 recovers μ_{}: {d2_matches}", k + 1);
    text.push_str("trees:\n");
    render_trees(&check.trees, &mut text);
    let json = json!({
        "header": to_value(&header),
        "class": to_value(&check.morita.to_json()),
        "diagram": to_value(&report),
        "pivotIndependent": pivot_independent,
        "trees": to_value(&check.trees.to_json()),
        "d2": to_value(&d2.to_entries()),
        "d2MatchesMilnor": d2_matches,
    });
    let mut doc = Document::new(json, text);
    if !(report.commutes && pivot_independent && d2_matches) {
        doc.exit_code = EXIT_INTERNAL;
    }
    Ok(doc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
struct CheckRow {
    name: &'static str,
    status: Status,
    detail: String,
}

fn row(name: &'static str, ok: bool, detail: impl Into<String>) -> CheckRow {
    CheckRow { name, status: if ok { Status::Pass } else { Status::Fail }, detail: detail.into() }
}

fn skip(name: &'static str, detail: impl Into<String>) -> CheckRow {
    CheckRow { name, status: Status::Skip, detail: detail.into() }
}

fn verify(job: &JobConfig) -> CliResult<Document> {
    let k = job.k;
    let n = job.n()?;
    let link = job.link()?;
    let trunc = job.truncation_at_least(2 * k)?.max(MoritaInput::required_truncation(k));
    let theta = job.theta(trunc)?;
    let mut rows = Vec::new();

    let mu = total_milnor(link, &theta, trunc)?;
    check_filtration(&mu, k)?;
    rows.push(row("filtration", true, format!("μ vanishes below degree {k}")));

    let here = milnor_degree_k(link, &theta, k)?;
    let mut others = vec![job.with_expansion(ExpansionChoice::Canonical)];
    others.extend(VERIFY_SEEDS.map(|seed| job.with_expansion(ExpansionChoice::Randomized { seed })));
    let mut same = true;
    for other in &others {
        same &= milnor_degree_k(link, &other.theta(k + 1)?, k)? == here;
    }
    rows.push(row("theta-independence", same, format!("degree {k} against canonical and seeds {VERIFY_SEEDS:?}")));

    let trunc_mu = truncated_milnor(link, &theta, k)?;
    let in_d = in_d_by_degree(&trunc_mu, k, 2 * k - 1)?;
    rows.push(row("range-in-D", in_d.iter().all(|(_, ok)| *ok), format!("degrees {k}..={}", 2 * k - 1)));

    match link {
        LinkData::Braid(b) => {
            let two = Q::from_integer(2.into());
            let additive = truncated_milnor(&b.mul(b).into(), &theta, k)? == trunc_mu.scale(&two);
            rows.push(row("additivity", additive, "μ(L·L) = 2 μ(L)"));
            let inv = b.mul(&b.inverse());
            let zero = truncated_milnor(&inv.into(), &theta, k)?.is_zero();
            rows.push(row("inverse", zero, "μ(L·L^-1) = 0"));
            let fast = art_theta_braid(b, &theta, trunc)?;
            let slow = art_theta(&longitudes(b)?, &theta, trunc)?;
            rows.push(row("functoriality", fast == slow, "generator-wise Art^θ equals the longitude path"));
        }
        LinkData::Tuple(_) => {
            rows.push(skip("additivity", "needs a braid"));
            rows.push(skip("inverse", "needs a braid"));
            rows.push(skip("functoriality", "needs a braid"));
        }
    }

    let comb = eta_inverse(&trunc_mu)?;
    let round = comb.eta(n, 2 * k - 1)? == trunc_mu.retruncate(2 * k - 1);
    rows.push(row("trees-round-trip", round, format!("{} tree terms", comb.len())));

    if mu.min_degree().is_none_or(|d| d > k) {
        let input = MoritaInput::new(link, &theta, k)?;
        rows.push(row("sigma-cycle", sigma(&input).boundary().is_zero(), "∂σ_L = 0"));
        let check = commutative_diagram(&input)?;
        let reverse = morita_milnor_with(&input, PivotOrder::Reverse)?;
        rows.push(row("pivot-independence", reverse == check.morita, "two bounding chains give one class"));
        rows.push(row("commutative-diagram", check.commutes(), check.morita.homology().fingerprint().to_string()));
        let mu_next = input.milnor().degree_part(k + 1).retruncate(k + 1);
        rows.push(row("d2", d2_composition(&check.morita)? == mu_next, format!("recovers μ_{}", k + 1)));
    } else {
        for name in ["sigma-cycle", "pivot-independence", "commutative-diagram", "d2"] {
            rows.push(skip(name, format!("input is not in filtration level {}", k + 1)));
        }
    }

    let header = job.header("verify", Some(trunc));
    let mut text = format!("{header}\n");
    for r in &rows {
        let tag = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        let _ = writeln!(text, "{tag} {}: {}", r.name, r.detail);
    }
    let failed = rows.iter().any(|r| r.status == Status::Fail);
    let json = json!({ "header": to_value(&header), "checks": to_value(&rows), "ok": !failed });
    let mut doc = Document::new(json, text);
    if failed {
        doc.exit_code = EXIT_INTERNAL;
    }
    Ok(doc)
}

impl JobConfig {
    fn with_expansion(&self, expansion: ExpansionChoice) -> JobConfig {
        JobConfig { expansion, ..self.clone() }
    }
}
