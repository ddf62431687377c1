//! Planted-pattern corpus generator.
//!
//! Every warning site comes from a template with a TP and an FP variant. The
//! variants share the reported statement's shape; what separates them lives in
//! the slice (guards, clamps, where a string comes from), sometimes inside a
//! helper function only reachable inter-procedurally. Each caller also gets
//! unrelated "noise" statements, some of which imitate the real signals.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{detect_all, Dataset, Label, VulnKind, Warning};
use crate::frontend::{Corpus, CorpusEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_projects: usize,
    pub tp_rate: f64,
    pub warnings_per_project: usize,
    pub warnings_per_file: usize,
    /// Probability that a site is a BO (otherwise NPD) pattern.
    pub bo_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { seed: 7, n_projects: 4, tp_rate: 0.3, warnings_per_project: 100, warnings_per_file: 5, bo_share: 0.75 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tp_rate > 0.0 && self.tp_rate < 1.0) || !(0.0..=1.0).contains(&self.bo_share) {
            return Err("synth tp_rate must lie in (0, 1) and bo_share in [0, 1]".into());
        }
        if self.n_projects == 0 || self.warnings_per_file == 0 || self.warnings_per_project == 0 {
            return Err("synth n_projects, warnings_per_project and warnings_per_file must be >= 1".into());
        }
        Ok(())
    }
}

/// Where a planted site's deciding statement sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plant {
    pub warning_id: String,
    pub template: &'static str,
    pub label: Label,
    pub evidence_file: String,
    pub evidence_line: u32,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub dataset: Dataset,
    pub plants: Vec<Plant>,
}

/// Generates `n_projects` projects with the default size settings.
pub fn synthesize_corpus(seed: u64, n_projects: usize, tp_rate: f64) -> SynthOutput {
    synthesize_with(&SynthConfig { seed, n_projects, tp_rate, ..SynthConfig::default() })
}

const PREFIXES: [&str; 10] = ["aoc", "sip", "rtp", "cdr", "pbx", "dns", "ftp", "ssl", "vm", "mgcp"];
const ROLES: [(&str, &[&str]); 14] = [
    ("dst", &["buf", "out", "dest", "line", "msg", "text", "label", "path"]),
    ("src", &["src", "input", "arg", "value", "data", "token", "word", "raw"]),
    ("len", &["len", "size", "count", "nbytes", "width", "limit", "amount", "span"]),
    ("ok", &["ok", "ready", "valid", "good", "usable", "alive", "fine", "okay"]),
    ("ptr", &["ptr", "cur", "node", "mem", "block", "cell", "slot", "area"]),
    ("idx", &["i", "j", "idx", "pos", "off", "at", "step", "round"]),
    ("str", &["s", "tmp", "desc", "tag", "kind_str", "name", "title", "caption"]),
    ("mode", &["mode", "type", "which", "sel", "opt", "code", "op", "variant"]),
    ("res", &["res", "ret", "rc", "got", "picked", "chosen", "result", "answer"]),
    ("n", &["n", "want", "need", "take", "copy_len", "part", "chunk", "piece"]),
    ("stash", &["stash", "store", "pool", "arena", "scratch", "spare", "backing", "room"]),
    ("c1", &["hits", "events", "calls", "ticks", "seq", "tries", "loops", "rounds"]),
    ("c2", &["stats", "total", "acc", "sum", "score", "level", "depth", "weight"]),
    ("decoy", &["env", "note", "hint", "extra", "aux", "misc", "other", "spare_str"]),
];
const VERBS: [&str; 8] = ["get", "lookup", "fetch", "find", "read", "load", "query", "resolve"];
const ACTIONS: [&str; 8] = ["handle", "process", "build", "format", "emit", "send", "render", "update"];
const WORDS: [&str; 20] = [
    "Duration", "Flat", "Volume", "Unit", "Free", "Total", "Rate", "Basic", "Daily", "Peak", "Hold", "Busy", "Idle",
    "Local", "Remote", "Admin", "Guest", "Main", "Aux", "Temp",
];
const ENVS: [&str; 6] = ["HOME", "PATH", "USER", "TERM", "SHELL", "LANG"];
const SIZES: [u32; 4] = [16, 32, 64, 128];

struct Style {
    prefix: String,
    names: BTreeMap<&'static str, String>,
    verb: &'static str,
    action: &'static str,
    words: Vec<&'static str>,
    envs: Vec<&'static str>,
}

impl Style {
    fn new(i: usize, rng: &mut ChaCha8Rng) -> Style {
        let base = PREFIXES[i % PREFIXES.len()];
        let prefix = if i < PREFIXES.len() { base.to_string() } else { format!("{base}{}", i / PREFIXES.len()) };
        let mut names = BTreeMap::new();
        let mut used = Vec::new();
        for (role, pool) in ROLES {
            let word = loop {
                let w = *pool.choose(rng).expect("non-empty pool");
                if !used.contains(&w) {
                    break w;
                }
            };
            used.push(word);
            names.insert(role, format!("{prefix}_{word}"));
        }
        let mut words = WORDS.to_vec();
        words.shuffle(rng);
        words.truncate(5);
        let mut envs = ENVS.to_vec();
        envs.shuffle(rng);
        envs.truncate(2);
        Style {
            prefix,
            names,
            verb: VERBS.choose(rng).expect("verbs"),
            action: ACTIONS.choose(rng).expect("actions"),
            words,
            envs,
        }
    }

    fn v(&self, role: &str) -> &str {
        &self.names[role]
    }
}

/// A source line: indentation depth, text, and whether it is the warning site
/// or the deciding evidence.
#[derive(Clone)]
struct Line {
    depth: usize,
    text: String,
    reported: bool,
    evidence: bool,
}

fn line(depth: usize, text: impl Into<String>) -> Line {
    Line { depth, text: text.into(), reported: false, evidence: false }
}

fn reported(l: Line) -> Line {
    Line { reported: true, ..l }
}

fn evidence(l: Line) -> Line {
    Line { evidence: true, ..l }
}

type Chunk = Vec<Line>;

struct Site {
    template: &'static str,
    kind: VulnKind,
    helper: Option<Vec<Line>>,
    decls: Vec<String>,
    chunks: Vec<Chunk>,
}

struct Ctx<'a> {
    st: &'a Style,
    rng: &'a mut ChaCha8Rng,
    helper_name: String,
}

impl Ctx<'_> {
    fn word(&mut self) -> &'static str {
        self.st.words.choose(self.rng).expect("words")
    }

    fn env(&mut self) -> &'static str {
        self.st.envs.choose(self.rng).expect("envs")
    }

    fn size(&mut self) -> u32 {
        *SIZES.choose(self.rng).expect("sizes")
    }

    fn small(&mut self) -> u32 {
        self.rng.gen_range(1..=9)
    }
}

fn bo_helper_string(c: &mut Ctx, tp: bool) -> Site {
    let (dst, res, mode) = (c.st.v("dst").to_string(), c.st.v("res").to_string(), c.st.v("mode").to_string());
    let (s, h) = (c.st.v("str").to_string(), c.helper_name.clone());
    let size = c.size();
    let k = c.small();
    let first = if tp {
        let e = c.env();
        format!("{s} = getenv(\"{e}\");")
    } else {
        format!("{s} = \"{}\";", c.word())
    };
    let other = c.word();
    let helper = vec![
        line(0, format!("char *{h}(int {mode})")),
        line(0, "{"),
        line(1, format!("char *{s};")),
        evidence(line(1, first)),
        line(1, format!("if ({mode} == {k}) {{")),
        line(2, format!("{s} = \"{other}\";")),
        line(1, "}"),
        line(1, format!("return {s};")),
        line(0, "}"),
    ];
    Site {
        template: "bo-helper-string",
        kind: VulnKind::BufferOverflow,
        helper: Some(helper),
        decls: vec![format!("char {dst}[{size}];"), format!("char *{res};")],
        chunks: vec![
            vec![line(0, format!("{dst}[0] = 0;"))],
            vec![line(0, format!("{res} = {h}({mode});"))],
            vec![reported(line(0, format!("strcat({dst}, {res});")))],
            vec![line(0, format!("printf(\"%s\", {dst});"))],
        ],
    }
}

fn bo_length_guard(c: &mut Ctx, tp: bool) -> Site {
    let (dst, src, len) = (c.st.v("dst").to_string(), c.st.v("src").to_string(), c.st.v("len").to_string());
    let size = c.size();
    // the TP variants bound the wrong value
    let decoy = c.st.v("decoy").to_string();
    let guard = match (tp, c.rng.gen_bool(0.5)) {
        (false, _) => format!("if (strlen({src}) < {size}) {{"),
        (true, true) => format!("if (strlen({decoy}) < {size}) {{"),
        (true, false) => format!("if ({len} < {size}) {{"),
    };
    Site {
        template: "bo-length-guard",
        kind: VulnKind::BufferOverflow,
        helper: None,
        decls: vec![format!("char {dst}[{size}];")],
        chunks: vec![
            vec![
                evidence(line(0, guard)),
                reported(line(1, format!("strcpy({dst}, {src});"))),
                line(0, "}"),
            ],
            vec![line(0, format!("printf(\"%s\", {dst});"))],
        ],
    }
}

fn bo_local_clamp(c: &mut Ctx, tp: bool) -> Site {
    let (dst, src, len, n) =
        (c.st.v("dst").to_string(), c.st.v("src").to_string(), c.st.v("len").to_string(), c.st.v("n").to_string());
    let size = c.size();
    // TP: the clamp lands on the input, not on the copy length
    let (first, clamp) = if tp {
        (evidence(line(0, format!("{n} = {len};"))), line(1, format!("{len} = {size};")))
    } else {
        (line(0, format!("{n} = {len};")), line(1, format!("{n} = {size};")))
    };
    let guard = line(0, format!("if ({n} > {size}) {{"));
    Site {
        template: "bo-local-clamp",
        kind: VulnKind::BufferOverflow,
        helper: None,
        decls: vec![format!("char {dst}[{size}];"), format!("int {n};")],
        chunks: vec![
            vec![first],
            vec![if tp { guard } else { evidence(guard) }, clamp, line(0, "}")],
            vec![reported(line(0, format!("memcpy({dst}, {src}, {n});")))],
        ],
    }
}

fn bo_helper_clamp(c: &mut Ctx, tp: bool) -> Site {
    let (dst, src, len, n) =
        (c.st.v("dst").to_string(), c.st.v("src").to_string(), c.st.v("len").to_string(), c.st.v("n").to_string());
    let (v, h) = (c.st.v("mode").to_string(), c.helper_name.clone());
    let size = c.size();
    // TP: the branches are swapped, so oversized values pass through
    let (inside, after) = if tp { (v.clone(), size.to_string()) } else { (size.to_string(), v.clone()) };
    let helper = vec![
        line(0, format!("int {h}(int {v})")),
        line(0, "{"),
        evidence(line(1, format!("if ({v} > {size}) {{"))),
        line(2, format!("return {inside};")),
        line(1, "}"),
        line(1, format!("return {after};")),
        line(0, "}"),
    ];
    Site {
        template: "bo-helper-clamp",
        kind: VulnKind::BufferOverflow,
        helper: Some(helper),
        decls: vec![format!("char {dst}[{size}];"), format!("int {n};")],
        chunks: vec![
            vec![line(0, format!("{n} = {h}({len});"))],
            vec![reported(line(0, format!("memcpy({dst}, {src}, {n});")))],
        ],
    }
}

fn bo_loop_append(c: &mut Ctx, tp: bool) -> Site {
    let (dst, src, len, i) =
        (c.st.v("dst").to_string(), c.st.v("src").to_string(), c.st.v("len").to_string(), c.st.v("idx").to_string());
    let size = c.size();
    let body = if tp {
        vec![
            evidence(line(0, format!("for ({i} = 0; {i} < {len}; {i}++) {{"))),
            reported(line(1, format!("strcat({dst}, {src});"))),
            line(0, "}"),
        ]
    } else {
        vec![
            line(0, format!("for ({i} = 0; {i} < {len}; {i}++) {{")),
            evidence(line(1, format!("if (strlen({dst}) + strlen({src}) < {size}) {{"))),
            reported(line(2, format!("strcat({dst}, {src});"))),
            line(1, "}"),
            line(0, "}"),
        ]
    };
    Site {
        template: "bo-loop-append",
        kind: VulnKind::BufferOverflow,
        helper: None,
        decls: vec![format!("char {dst}[{size}];"), format!("int {i};")],
        chunks: vec![vec![line(0, format!("{dst}[0] = 0;"))], body, vec![line(0, format!("printf(\"%s\", {dst});"))]],
    }
}

fn npd_flag_check(c: &mut Ctx, tp: bool) -> Site {
    let (p, ok, len) = (c.st.v("ptr").to_string(), c.st.v("ok").to_string(), c.st.v("len").to_string());
    let decoy = c.st.v("decoy");
    let cond = if tp { format!("{decoy} != NULL") } else { format!("{p} != NULL") };
    Site {
        template: "npd-flag-check",
        kind: VulnKind::NullPointerDeref,
        helper: None,
        decls: vec![format!("char *{p};"), format!("int {ok};")],
        chunks: vec![
            vec![line(0, format!("{p} = malloc({len});"))],
            vec![line(0, format!("{ok} = 0;"))],
            vec![evidence(line(0, format!("if ({cond}) {{"))), line(1, format!("{ok} = 1;")), line(0, "}")],
            vec![line(0, format!("if ({ok}) {{")), reported(line(1, format!("{p}[0] = 0;"))), line(0, "}")],
        ],
    }
}

fn npd_mode_null(c: &mut Ctx, tp: bool) -> Site {
    let (p, mode, stash) = (c.st.v("ptr").to_string(), c.st.v("mode").to_string(), c.st.v("stash").to_string());
    let size = c.size();
    let k = c.small();
    let second = if tp { format!("if ({mode} > {k}) {{") } else { format!("if ({mode} == {k}) {{") };
    Site {
        template: "npd-mode-null",
        kind: VulnKind::NullPointerDeref,
        helper: None,
        decls: vec![format!("char {stash}[{size}];"), format!("char *{p};")],
        chunks: vec![
            vec![line(0, format!("{p} = NULL;"))],
            vec![line(0, format!("if ({mode} == {k}) {{")), line(1, format!("{p} = {stash};")), line(0, "}")],
            vec![evidence(line(0, second)), reported(line(1, format!("{p}[0] = 0;"))), line(0, "}")],
        ],
    }
}

fn npd_helper_check(c: &mut Ctx, tp: bool) -> Site {
    let (p, ok, len) = (c.st.v("ptr").to_string(), c.st.v("ok").to_string(), c.st.v("len").to_string());
    let h = c.helper_name.clone();
    let q = c.st.v("str").to_string();
    // TP: the check runs on a different pointer
    let arg = if tp { c.st.v("decoy").to_string() } else { p.clone() };
    let helper = vec![
        line(0, format!("int {h}(char *{q})")),
        line(0, "{"),
        evidence(line(1, format!("if ({q} == NULL) {{"))),
        line(2, "return 0;"),
        line(1, "}"),
        line(1, "return 1;"),
        line(0, "}"),
    ];
    Site {
        template: "npd-helper-check",
        kind: VulnKind::NullPointerDeref,
        helper: Some(helper),
        decls: vec![format!("char *{p};"), format!("int {ok};")],
        chunks: vec![
            vec![line(0, format!("{p} = malloc({len});"))],
            vec![line(0, format!("{ok} = {h}({arg});"))],
            vec![line(0, format!("if ({ok}) {{")), reported(line(1, format!("{p}[0] = 0;"))), line(0, "}")],
        ],
    }
}

type Template = fn(&mut Ctx, bool) -> Site;
const BO_TEMPLATES: [Template; 5] = [bo_helper_string, bo_length_guard, bo_local_clamp, bo_helper_clamp, bo_loop_append];
const NPD_TEMPLATES: [Template; 3] = [npd_flag_check, npd_mode_null, npd_helper_check];

/// Unrelated statements over the noise variables; some mimic real signals.
fn noise_chunk(c: &mut Ctx, global: &str) -> Chunk {
    let (c1, c2, decoy) = (c.st.v("c1"), c.st.v("c2"), c.st.v("decoy"));
    let k = c.rng.gen_range(1..=9);
    match c.rng.gen_range(0..8) {
        0 => vec![line(0, format!("{c1} = {c1} + {k};"))],
        1 => {
            let w = c.word();
            vec![line(0, format!("printf(\"{w} %d\", {c1});"))]
        }
        2 => vec![line(0, format!("{c2} = {c1} * {k};"))],
        3 => vec![line(0, format!("if ({c1} > {k}) {{")), line(1, format!("{c2} = {c2} - 1;")), line(0, "}")],
        4 => {
            let e = c.env();
            vec![line(0, format!("{decoy} = getenv(\"{e}\");")), line(0, format!("printf(\"%s\", {decoy});"))]
        }
        5 => {
            let size = c.size();
            vec![line(0, format!("if (strlen({decoy}) < {size}) {{")), line(1, format!("{c2} = 0;")), line(0, "}")]
        }
        6 => vec![
            line(0, format!("{decoy} = malloc({});", c.size())),
            line(0, format!("if ({decoy} != NULL) {{")),
            line(1, format!("free({decoy});")),
            line(0, "}"),
        ],
        _ => {
            let w = c.word();
            vec![line(0, format!("if ({global}) {{")), line(1, format!("printf(\"{w}\");")), line(0, "}")]
        }
    }
}

struct FileBuilder {
    lines: Vec<String>,
}

impl FileBuilder {
    /// Appends a line and returns its 1-based number.
    fn push(&mut self, depth: usize, text: &str) -> u32 {
        self.lines.push(format!("{}{}", "    ".repeat(depth), text));
        self.lines.len() as u32
    }
}

struct PendingPlant {
    line: u32,
    kind: VulnKind,
    template: &'static str,
    label: Label,
    evidence_line: u32,
}

/// Deterministic corpus + labeled warnings for `cfg`.
pub fn synthesize_with(cfg: &SynthConfig) -> SynthOutput {
    assert!(cfg.tp_rate > 0.0 && cfg.tp_rate < 1.0, "tp_rate must lie in (0, 1)");
    assert!(cfg.warnings_per_file >= 1 && cfg.n_projects >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut entries = Vec::new();
    let mut pending: BTreeMap<String, Vec<PendingPlant>> = BTreeMap::new();

    for pi in 0..cfg.n_projects {
        let st = Style::new(pi, &mut rng);
        let project = format!("proj-{}", st.prefix);
        let n_files = cfg.warnings_per_project.div_ceil(cfg.warnings_per_file);
        let mut remaining = cfg.warnings_per_project;
        let mut counter = 0usize;
        for fi in 0..n_files {
            let path = format!("{project}/{}_{:02}.mc", st.prefix, fi + 1);
            let global = format!("{}_debug{}", st.prefix, fi + 1);
            let mut fb = FileBuilder { lines: Vec::new() };
            fb.push(0, &format!("int {global} = 0;"));
            let plants = pending.entry(path.clone()).or_default();
            for _ in 0..cfg.warnings_per_file.min(remaining) {
                remaining -= 1;
                counter += 1;
                let tp = rng.gen_bool(cfg.tp_rate);
                let label = if tp { Label::TruePositive } else { Label::FalsePositive };
                let template = if rng.gen_bool(cfg.bo_share) {
                    *BO_TEMPLATES.choose(&mut rng).expect("templates")
                } else {
                    *NPD_TEMPLATES.choose(&mut rng).expect("templates")
                };
                let helper_name = format!("{}_{}_{}", st.prefix, st.verb, counter);
                let mut ctx = Ctx { st: &st, rng: &mut rng, helper_name };
                let site = template(&mut ctx, tp);
                let n_noise = ctx.rng.gen_range(2..=5);
                let noise: Vec<Chunk> = (0..n_noise).map(|_| noise_chunk(&mut ctx, &global)).collect();

                // interleave noise between (and around) the pattern chunks
                let mut slots: Vec<usize> = (0..n_noise).map(|_| ctx.rng.gen_range(0..=site.chunks.len())).collect();
                slots.sort_unstable();
                let mut body: Vec<Line> = Vec::new();
                let mut noise_iter = noise.into_iter().zip(slots).peekable();
                for (ci, chunk) in site.chunks.iter().enumerate() {
                    while let Some((n, _)) = noise_iter.next_if(|(_, s)| *s == ci) {
                        body.extend(n);
                    }
                    body.extend(chunk.iter().cloned());
                }
                for (n, _) in noise_iter {
                    body.extend(n);
                }

                let mut evidence_line = None;
                if let Some(helper) = &site.helper {
                    fb.push(0, "");
                    for l in helper {
                        let no = fb.push(l.depth, &l.text);
                        if l.evidence {
                            evidence_line = Some(no);
                        }
                    }
                }
                let (src, len, mode) = (st.v("src"), st.v("len"), st.v("mode"));
                let (c1, c2, decoy) = (st.v("c1"), st.v("c2"), st.v("decoy"));
                fb.push(0, "");
                fb.push(0, &format!("void {}_{}_{}(char *{src}, int {len}, int {mode})", st.prefix, st.action, counter));
                fb.push(0, "{");
                for d in &site.decls {
                    fb.push(1, d);
                }
                fb.push(1, &format!("int {c1} = 0;"));
                fb.push(1, &format!("int {c2} = 0;"));
                let w = st.words[0];
                fb.push(1, &format!("char *{decoy} = \"{w}\";"));
                let mut reported_line = None;
                for l in &body {
                    let no = fb.push(l.depth + 1, &l.text);
                    if l.reported {
                        reported_line = Some(no);
                    }
                    if l.evidence {
                        evidence_line = Some(no);
                    }
                }
                fb.push(0, "}");
                plants.push(PendingPlant {
                    line: reported_line.expect("every template reports one line"),
                    kind: site.kind,
                    template: site.template,
                    label,
                    evidence_line: evidence_line.expect("every template marks its evidence"),
                });
            }
            let mut text = fb.lines.join("\n");
            text.push('\n');
            entries.push((CorpusEntry { path, project: project.clone() }, text));
        }
    }

    let corpus = Corpus::from_sources(entries).expect("generated sources parse");
    let mut warnings: Vec<Warning> = Vec::new();
    let mut plants = Vec::new();
    for unit in &corpus.units {
        let expected = &pending[&unit.source_id];
        let mut found = detect_all(unit);
        found.sort_by_key(|w| w.line);
        assert_eq!(
            found.iter().map(|w| (w.line, w.kind)).collect::<Vec<_>>(),
            expected.iter().map(|p| (p.line, p.kind)).collect::<Vec<_>>(),
            "detector output disagrees with planted sites in {}",
            unit.source_id
        );
        for (mut w, p) in found.into_iter().zip(expected) {
            w.label = Some(p.label);
            plants.push(Plant {
                warning_id: w.id.clone(),
                template: p.template,
                label: p.label,
                evidence_file: unit.source_id.clone(),
                evidence_line: p.evidence_line,
            });
            warnings.push(w);
        }
    }
    let dataset = Dataset { warnings, project_of: corpus.project_of() };
    SynthOutput { corpus, dataset, plants }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthOutput {
        synthesize_with(&SynthConfig { seed, n_projects: 2, warnings_per_project: 20, ..SynthConfig::default() })
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (small(3), small(3));
        assert_eq!(a.corpus.sources, b.corpus.sources);
        assert_eq!(a.dataset, b.dataset);
        assert_ne!(small(4).corpus.sources, a.corpus.sources);
    }

    #[test]
    fn one_warning_per_plant_all_labeled() {
        let out = small(11);
        assert_eq!(out.dataset.len(), 40);
        assert!(out.dataset.is_fully_labeled());
        assert_eq!(out.plants.len(), 40);
        let projects: std::collections::BTreeSet<_> = out.corpus.manifest.files.iter().map(|e| &e.project).collect();
        assert_eq!(projects.len(), 2);
    }

    #[test]
    fn every_template_is_used() {
        let out = synthesize_with(&SynthConfig { seed: 1, ..SynthConfig::default() });
        let used: std::collections::BTreeSet<_> = out.plants.iter().map(|p| p.template).collect();
        assert_eq!(used.len(), BO_TEMPLATES.len() + NPD_TEMPLATES.len());
    }
}
