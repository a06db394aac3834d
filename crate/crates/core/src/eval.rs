//! Code-generation metrics: unbiased pass@k over sampled completions and the
//! per-project statistics (cost, code size, productivity, human scores).

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::llm::CostLedger;
use crate::model::CodeArtifact;
use crate::sandbox::{expand_template, ExecLimits, ExecStatus, ExecutionResult, Sandbox};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("pass@k needs 1 <= k <= n and 0 <= c <= n (got n={n}, c={c}, k={k})")]
    Domain { n: u64, c: u64, k: u64 },
    #[error("task {task_id} has {n} samples but k={k} needs at least that many")]
    SampleCountTooSmall { task_id: String, n: usize, k: usize },
    #[error("{file}:{line}: {reason}")]
    Format {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("samples reference unknown task {0:?}")]
    UnknownTask(String),
    #[error("no source files under {0}")]
    NoSourceFiles(PathBuf),
    #[error("productivity is undefined for zero lines of code")]
    ZeroLines,
    #[error("{0}")]
    Range(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Probability that at least one of `k` samples drawn without replacement
/// from `n`, of which `c` are correct, is correct.
///
/// Computed as `1 - prod_{i=n-c+1}^{n} (1 - k/i)`, which equals
/// `1 - C(n-c, k) / C(n, k)` without forming binomials.
///
/// ```
/// use sopforge::eval::pass_at_k;
/// assert!((pass_at_k(5, 2, 1).unwrap() - 0.4).abs() < 1e-12);
/// assert_eq!(pass_at_k(5, 0, 3).unwrap(), 0.0);
/// assert_eq!(pass_at_k(4, 3, 2).unwrap(), 1.0);
/// ```
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    if k == 0 || k > n || c > n {
        return Err(EvalError::Domain { n, c, k });
    }
    if c == 0 {
        return Ok(0.0);
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// One line of a benchmark task file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub task_id: String,
    pub prompt: String,
    /// Assertion program run after the completion.
    pub test: String,
    pub entry_point: String,
}

impl BenchmarkTask {
    /// The program a sample is judged by: prompt, completion, tests, and a
    /// call to `check(entry_point)` when the tests define one.
    pub fn program(&self, completion: &str) -> String {
        let mut src = if completion.starts_with(self.prompt.as_str()) {
            completion.to_string()
        } else {
            format!("{}{}", self.prompt, completion)
        };
        src.push_str("\n\n");
        src.push_str(&self.test);
        if self.test.contains("def check(") {
            src.push_str(&format!("\n\ncheck({})\n", self.entry_point));
        }
        src
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub task_id: String,
    pub completion: String,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let text = fs::read_to_string(path)?;
    parse_jsonl(&text, &path.display().to_string())
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, file: &str) -> Result<Vec<T>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Format {
                file: file.to_string(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn load_tasks(path: &Path) -> Result<Vec<BenchmarkTask>, EvalError> {
    read_jsonl(path)
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>, EvalError> {
    read_jsonl(path)
}

/// Outcome of all samples for one task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub task_id: String,
    pub n: usize,
    pub c: usize,
    #[serde(skip)]
    pub results: Vec<ExecutionResult>,
}

/// Per-task pass@k for each requested k, plus the mean over tasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassKTable {
    pub ks: Vec<usize>,
    pub records: Vec<EvalRecord>,
    /// `scores[t][j]` is pass@`ks[j]` for `records[t]`.
    pub scores: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl PassKTable {
    /// Builds the table from pass counts alone.
    pub fn from_records(records: Vec<EvalRecord>, ks: &[usize]) -> Result<Self, EvalError> {
        let mut scores = Vec::with_capacity(records.len());
        for r in &records {
            let mut row = Vec::with_capacity(ks.len());
            for &k in ks {
                if r.n < k {
                    return Err(EvalError::SampleCountTooSmall {
                        task_id: r.task_id.clone(),
                        n: r.n,
                        k,
                    });
                }
                row.push(pass_at_k(r.n as u64, r.c as u64, k as u64)?);
            }
            scores.push(row);
        }
        let mean = (0..ks.len())
            .map(|j| {
                if scores.is_empty() {
                    0.0
                } else {
                    scores.iter().map(|row| row[j]).sum::<f64>() / scores.len() as f64
                }
            })
            .collect();
        Ok(PassKTable {
            ks: ks.to_vec(),
            records,
            scores,
            mean,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("task_id\tn\tc");
        for k in &self.ks {
            out.push_str(&format!("\tpass@{k}"));
        }
        out.push('\n');
        for (r, row) in self.records.iter().zip(&self.scores) {
            out.push_str(&format!("{}\t{}\t{}", r.task_id, r.n, r.c));
            for v in row {
                out.push_str(&format!("\t{v:.6}"));
            }
            out.push('\n');
        }
        out.push_str("mean\t\t");
        for v in &self.mean {
            out.push_str(&format!("\t{v:.6}"));
        }
        out.push('\n');
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let per_task: serde_json::Map<String, serde_json::Value> = self
            .records
            .iter()
            .zip(&self.scores)
            .map(|(r, row)| {
                (
                    r.task_id.clone(),
                    serde_json::json!({
                        "n": r.n,
                        "c": r.c,
                        "pass_at_k": by_k(&self.ks, row),
                    }),
                )
            })
            .collect();
        serde_json::json!({
            "ks": self.ks,
            "tasks": per_task,
            "mean": by_k(&self.ks, &self.mean),
        })
    }
}

fn by_k(ks: &[usize], values: &[f64]) -> serde_json::Value {
    ks.iter()
        .zip(values)
        .map(|(k, v)| (format!("pass@{k}"), serde_json::Value::from(*v)))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

/// Runs every sample against its task's tests and tabulates pass@k.
///
/// Tasks keep their file order; tasks without samples are an error, since
/// they cannot satisfy any k.
pub fn evaluate_samples(
    tasks: &[BenchmarkTask],
    samples: &[Sample],
    sandbox: &Sandbox,
    limits: &ExecLimits,
    ks: &[usize],
) -> Result<PassKTable, EvalError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvalError::Range("k values must be positive".into()));
    }
    let index: HashMap<&str, usize> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| (t.task_id.as_str(), i))
        .collect();
    let mut per_task: Vec<Vec<&Sample>> = vec![Vec::new(); tasks.len()];
    for s in samples {
        let i = *index
            .get(s.task_id.as_str())
            .ok_or_else(|| EvalError::UnknownTask(s.task_id.clone()))?;
        per_task[i].push(s);
    }
    let k_max = *ks.iter().max().expect("non-empty");
    for (task, list) in tasks.iter().zip(&per_task) {
        if list.len() < k_max {
            return Err(EvalError::SampleCountTooSmall {
                task_id: task.task_id.clone(),
                n: list.len(),
                k: k_max,
            });
        }
    }

    let jobs: Vec<(usize, &Sample)> = per_task
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |s| (i, *s)))
        .collect();
    let argv = expand_template(
        &sandbox.config().run_template,
        &[("interp", &sandbox.config().interpreter), ("file", "program.py")],
    );
    let results: Vec<(usize, ExecutionResult)> = jobs
        .par_iter()
        .map(|(i, sample)| {
            let program = tasks[*i].program(&sample.completion);
            let file = CodeArtifact::draft("program.py", program, "python").expect("static name");
            (*i, sandbox.execute_raw(&[file], &argv, limits))
        })
        .collect();
    if let Some((_, r)) = results.iter().find(|(_, r)| r.status == ExecStatus::SpawnError) {
        return Err(EvalError::Io(io::Error::other(r.stderr.clone())));
    }

    let mut records: Vec<EvalRecord> = tasks
        .iter()
        .map(|t| EvalRecord {
            task_id: t.task_id.clone(),
            n: 0,
            c: 0,
            results: Vec::new(),
        })
        .collect();
    for (i, r) in results {
        let rec = &mut records[i];
        rec.n += 1;
        if r.passed() {
            rec.c += 1;
        }
        rec.results.push(r);
    }
    PassKTable::from_records(records, ks)
}

/// Extensions counted as source by default.
pub const SOURCE_EXTENSIONS: &[&str] = &[
    "py", "js", "ts", "jsx", "tsx", "rs", "go", "java", "c", "h", "cpp", "hpp", "cs", "rb", "php",
    "html", "css", "sh",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeStats {
    pub code_files: usize,
    pub lines_per_file: f64,
    pub total_lines: u64,
}

/// Newline-delimited lines; a last line without a newline still counts, a
/// single trailing empty line does not.
pub fn count_lines(text: &str) -> u64 {
    let newlines = text.bytes().filter(|&b| b == b'\n').count() as u64;
    if text.is_empty() || text.ends_with('\n') {
        newlines
    } else {
        newlines + 1
    }
}

/// Counts source files (by extension, case-insensitive) under `dir`.
pub fn code_stats(dir: &Path, extensions: &[&str]) -> Result<CodeStats, EvalError> {
    if !dir.is_dir() {
        return Err(EvalError::NoSourceFiles(dir.to_path_buf()));
    }
    let mut files = 0usize;
    let mut total = 0u64;
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| EvalError::Io(io::Error::other(e)))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let matches = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if !matches {
            continue;
        }
        let bytes = fs::read(entry.path())?;
        files += 1;
        total += count_lines(&String::from_utf8_lossy(&bytes));
    }
    if files == 0 {
        return Err(EvalError::NoSourceFiles(dir.to_path_buf()));
    }
    Ok(CodeStats {
        code_files: files,
        lines_per_file: total as f64 / files as f64,
        total_lines: total,
    })
}

/// Tokens spent per line of code. Lines may be an average, hence real.
///
/// ```
/// use sopforge::eval::productivity;
/// assert!((productivity(31255, 251.4).unwrap() - 124.3).abs() < 0.05);
/// ```
pub fn productivity(token_usage: u64, total_lines: f64) -> Result<f64, EvalError> {
    if !(total_lines > 0.0) {
        return Err(EvalError::ZeroLines);
    }
    Ok(token_usage as f64 / total_lines)
}

/// Statistics for one generated project. Human scores are recorded, never
/// computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub executability: Option<f64>,
    pub running_time: f64,
    pub token_usage: u64,
    pub code_files: usize,
    pub lines_per_file: f64,
    pub total_lines: u64,
    pub productivity: f64,
    pub human_revisions: Option<f64>,
}

impl StatRow {
    pub fn new(ledger: &CostLedger, stats: CodeStats) -> Result<Self, EvalError> {
        let tokens = ledger.totals.tokens();
        Ok(StatRow {
            executability: None,
            running_time: ledger.totals.seconds,
            token_usage: tokens,
            code_files: stats.code_files,
            lines_per_file: stats.lines_per_file,
            total_lines: stats.total_lines,
            productivity: productivity(tokens, stats.total_lines as f64)?,
            human_revisions: None,
        })
    }

    /// Reads `ledger.json` and counts `src/` under a workspace.
    pub fn from_workspace(workspace: &Path, extensions: &[&str]) -> Result<Self, EvalError> {
        let stats = code_stats(&workspace.join("src"), extensions)?;
        let ledger = CostLedger::load(&workspace.join("ledger.json"))?;
        Self::new(&ledger, stats)
    }

    /// Whether stored productivity agrees with the stored counts.
    pub fn is_consistent(&self) -> bool {
        productivity(self.token_usage, self.total_lines as f64)
            .is_ok_and(|p| (p - self.productivity).abs() <= 1e-9)
            && (self.lines_per_file * self.code_files as f64 - self.total_lines as f64).abs() < 0.5
    }

    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x}"));
        format!(
            "executability\trunning_time\ttoken_usage\tcode_files\tlines_per_file\ttotal_lines\tproductivity\thuman_revisions\n{}\t{:.2}\t{}\t{}\t{:.1}\t{}\t{:.1}\t{}\n",
            opt(self.executability),
            self.running_time,
            self.token_usage,
            self.code_files,
            self.lines_per_file,
            self.total_lines,
            self.productivity,
            opt(self.human_revisions),
        )
    }
}

/// Stores human-entered executability (1 to 4) and revision count (>= 0).
pub fn record_human_scores(
    row: StatRow,
    executability: f64,
    revisions: f64,
) -> Result<StatRow, EvalError> {
    if !(1.0..=4.0).contains(&executability) {
        return Err(EvalError::Range(format!(
            "executability must be within [1, 4], got {executability}"
        )));
    }
    if !(revisions.is_finite() && revisions >= 0.0) {
        return Err(EvalError::Range(format!(
            "revisions must be a non-negative number, got {revisions}"
        )));
    }
    Ok(StatRow {
        executability: Some(executability),
        human_revisions: Some(revisions),
        ..row
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Fraction of all k-subsets of n samples (the first c correct) that
    /// contain a correct sample, by walking every subset bitmask.
    fn enumerate(n: u32, c: u32, k: u32) -> f64 {
        let correct_mask: u32 = (1 << c) - 1;
        let (mut hit, mut total) = (0u64, 0u64);
        for subset in 0u32..(1 << n) {
            if subset.count_ones() != k {
                continue;
            }
            total += 1;
            if subset & correct_mask != 0 {
                hit += 1;
            }
        }
        hit as f64 / total as f64
    }

    #[test]
    fn matches_enumeration_up_to_twelve() {
        for n in 1..=12u32 {
            for c in 0..=n {
                for k in 1..=n {
                    let got = pass_at_k(n as u64, c as u64, k as u64).unwrap();
                    let want = enumerate(n, c, k);
                    assert!((got - want).abs() <= 1e-12, "n={n} c={c} k={k}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn derived_examples() {
        assert_eq!(enumerate(5, 2, 1), 0.4);
        assert!((pass_at_k(5, 2, 1).unwrap() - 0.4).abs() <= 1e-12);
        assert!((enumerate(10, 3, 5) - 231.0 / 252.0).abs() < 1e-15);
        assert!((pass_at_k(10, 3, 5).unwrap() - 231.0 / 252.0).abs() <= 1e-12);
        assert_eq!(pass_at_k(1, 1, 1).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(pass_at_k(5, 1, 0), Err(EvalError::Domain { .. })));
        assert!(matches!(pass_at_k(5, 1, 6), Err(EvalError::Domain { .. })));
        assert!(matches!(pass_at_k(5, 6, 1), Err(EvalError::Domain { .. })));
    }

    proptest! {
        #[test]
        fn boundaries_are_exact(n in 1u64..200, k_frac in 0.0f64..1.0) {
            let k = 1 + ((n - 1) as f64 * k_frac) as u64;
            prop_assert_eq!(pass_at_k(n, 0, k).unwrap(), 0.0);
            prop_assert_eq!(pass_at_k(n, n, k).unwrap(), 1.0);
            for c in (n - k + 1)..=n {
                prop_assert_eq!(pass_at_k(n, c, k).unwrap(), 1.0);
            }
        }

        #[test]
        fn monotone_in_c_and_k(n in 1u64..60, c in 0u64..60, k in 1u64..60) {
            prop_assume!(c <= n && k <= n);
            let v = pass_at_k(n, c, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            if c < n {
                prop_assert!(pass_at_k(n, c + 1, k).unwrap() >= v);
            }
            if k < n {
                prop_assert!(pass_at_k(n, c, k + 1).unwrap() >= v);
            }
        }

        #[test]
        fn mean_is_average_of_rows(counts in proptest::collection::vec((1usize..10, 0usize..10), 1..8)) {
            let records: Vec<EvalRecord> = counts
                .iter()
                .enumerate()
                .map(|(i, &(n, c))| EvalRecord { task_id: format!("t{i}"), n: n.max(2), c: c.min(n.max(2)), results: Vec::new() })
                .collect();
            let table = PassKTable::from_records(records, &[1, 2]).unwrap();
            for j in 0..2 {
                let manual: f64 = table.scores.iter().map(|r| r[j]).sum::<f64>() / table.scores.len() as f64;
                prop_assert!((manual - table.mean[j]).abs() < 1e-12);
            }
        }

        #[test]
        fn stat_row_is_consistent(tokens in 0u64..10_000_000, files in 1usize..50, per in 0u64..500) {
            let total = files as u64 * per;
            prop_assume!(total > 0);
            let stats = CodeStats { code_files: files, lines_per_file: total as f64 / files as f64, total_lines: total };
            let mut ledger = CostLedger::default();
            ledger.record(crate::llm::LedgerEntry {
                role: "r".into(),
                action: crate::model::ActionKind::WriteCode,
                prompt_tokens: tokens,
                completion_tokens: 0,
                seconds: 0.0,
            });
            let row = StatRow::new(&ledger, stats).unwrap();
            prop_assert!(row.is_consistent());
        }
    }

    #[test]
    fn table_two_productivity() {
        for (tokens, lines, want) in [(19292, 77.5, 248.9), (24613, 194.6, 126.5), (31255, 251.4, 124.3)] {
            let got = productivity(tokens, lines).unwrap();
            assert!((got - want).abs() <= 0.05, "{tokens}/{lines} = {got}");
        }
        assert!(matches!(productivity(10, 0.0), Err(EvalError::ZeroLines)));
    }

    #[test]
    fn human_scores_are_range_checked() {
        let row = StatRow {
            executability: None,
            running_time: 0.0,
            token_usage: 10,
            code_files: 1,
            lines_per_file: 5.0,
            total_lines: 5,
            productivity: 2.0,
            human_revisions: None,
        };
        let r = record_human_scores(row.clone(), 3.75, 0.83).unwrap();
        assert_eq!(r.executability, Some(3.75));
        assert!(record_human_scores(row.clone(), 1.0, 10.0).is_ok());
        assert!(matches!(record_human_scores(row.clone(), 5.0, 0.0), Err(EvalError::Range(_))));
        assert!(matches!(record_human_scores(row.clone(), 0.5, 0.0), Err(EvalError::Range(_))));
        assert!(matches!(record_human_scores(row.clone(), f64::NAN, 0.0), Err(EvalError::Range(_))));
        assert!(matches!(record_human_scores(row, 2.0, -1.0), Err(EvalError::Range(_))));
    }

    #[test]
    fn line_counting() {
        assert_eq!(count_lines(""), 0);
        assert_eq!(count_lines("a\n"), 1);
        assert_eq!(count_lines("a"), 1);
        assert_eq!(count_lines("a\nb"), 2);
        assert_eq!(count_lines("a\n\n"), 2);
    }

    #[test]
    fn code_stats_over_a_tree() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(code_stats(dir.path(), SOURCE_EXTENSIONS), Err(EvalError::NoSourceFiles(_))));
        let ten = "x\n".repeat(10);
        fs::write(dir.path().join("a.py"), &ten).unwrap();
        fs::create_dir(dir.path().join("pkg")).unwrap();
        fs::write(dir.path().join("pkg/b.py"), &ten).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored\n").unwrap();
        let s = code_stats(dir.path(), SOURCE_EXTENSIONS).unwrap();
        assert_eq!((s.code_files, s.lines_per_file, s.total_lines), (2, 10.0, 20));
        fs::write(dir.path().join("c.PY"), "one\ntwo").unwrap();
        assert_eq!(code_stats(dir.path(), &["py"]).unwrap().total_lines, 22);
        assert!(matches!(
            code_stats(&dir.path().join("missing"), &["py"]),
            Err(EvalError::NoSourceFiles(_))
        ));
    }

    #[test]
    fn program_assembly() {
        let task = BenchmarkTask {
            task_id: "t".into(),
            prompt: "def f(x):\n".into(),
            test: "def check(g):\n    assert g(1) == 2\n".into(),
            entry_point: "f".into(),
        };
        let p = task.program("    return x + 1\n");
        assert!(p.starts_with("def f(x):\n    return x + 1\n"));
        assert!(p.ends_with("check(f)\n"));
        assert_eq!(task.program("def f(x):\n    return 2\n").matches("def f").count(), 1);
    }

    #[test]
    fn evaluates_canned_samples() {
        let tasks = vec![
            BenchmarkTask {
                task_id: "A".into(),
                prompt: "def inc(x):\n".into(),
                test: "def check(f):\n    assert f(1) == 2\n".into(),
                entry_point: "inc".into(),
            },
            BenchmarkTask {
                task_id: "B".into(),
                prompt: "def dec(x):\n".into(),
                test: "def check(f):\n    assert f(1) == 0\n".into(),
                entry_point: "dec".into(),
            },
        ];
        let s = |t: &str, c: &str| Sample {
            task_id: t.into(),
            completion: c.into(),
        };
        let samples = vec![
            s("A", "    return x + 1\n"),
            s("A", "    return 1 + x\n"),
            s("B", "    return x\n"),
            s("B", "    return x + 5\n"),
        ];
        let table =
            evaluate_samples(&tasks, &samples, &Sandbox::default(), &ExecLimits::default(), &[1, 2])
                .unwrap();
        assert_eq!((table.records[0].n, table.records[0].c), (2, 2));
        assert_eq!((table.records[1].n, table.records[1].c), (2, 0));
        assert_eq!(table.mean, vec![0.5, 0.5]);
        assert!(table.to_tsv().starts_with("task_id\tn\tc\tpass@1\tpass@2\n"));
        assert_eq!(table.summary_json()["mean"]["pass@1"], 0.5);

        let err = evaluate_samples(&tasks, &samples, &Sandbox::default(), &ExecLimits::default(), &[3])
            .unwrap_err();
        assert!(matches!(err, EvalError::SampleCountTooSmall { n: 2, k: 3, .. }));
        let err = evaluate_samples(&tasks, &[s("Z", "")], &Sandbox::default(), &ExecLimits::default(), &[1])
            .unwrap_err();
        assert!(matches!(err, EvalError::UnknownTask(_)));
    }

    #[test]
    fn malformed_lines_are_located() {
        let err = parse_jsonl::<Sample>("{\"task_id\":\"a\",\"completion\":\"\"}\n\nnot json\n", "s.jsonl")
            .unwrap_err();
        assert!(matches!(err, EvalError::Format { line: 3, .. }));
    }
}
