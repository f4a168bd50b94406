//! A generated Java project with planted localization signal.
//!
//! Methods are grouped into topics (one class per topic). Every method owns
//! a distinctive word that appears in its name, body and comment, and each
//! topic has a small shared vocabulary. Bug reports mention the distinctive
//! word of their faulty method with high probability, some topic words and
//! unrelated filler. A minority of "hot" methods attracts most of the bugs,
//! so fixing history is informative too. About a third of the methods are
//! short delegates to a longer method of the same topic.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::jsonl::Record;
use crate::corpus::{BugReportRecord, CommitRecord, Corpus, SourceFile, Timestamp, SECONDS_PER_DAY};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub reports: usize,
    /// Methods in the initial revision.
    pub methods: usize,
    pub methods_per_topic: usize,
    pub hot_methods: usize,
    /// Probability that a bug lands in a hot method.
    pub hot_share: f64,
    pub short_share: f64,
    /// Probability that a report mentions its faulty method's own word.
    pub mention_rate: f64,
    /// Probability that a report spells out the faulty method's full name.
    pub localized_rate: f64,
    /// Probability of a maintenance commit between consecutive events.
    pub maintenance_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            reports: 200,
            methods: 300,
            methods_per_topic: 10,
            hot_methods: 15,
            hot_share: 0.95,
            short_share: 0.3,
            mention_rate: 0.85,
            localized_rate: 0.15,
            maintenance_rate: 0.3,
            seed: 7,
        }
    }
}

const START: Timestamp = 1_420_070_400; // 2015-01-01

const VERBS: &[&str] = &["parse", "load", "build", "apply", "resolve", "update", "check", "render", "merge", "scan"];
const COMMON: &[&str] = &[
    "value", "result", "buffer", "index", "count", "state", "config", "handler", "context", "entry", "node",
    "item", "data", "limit", "cache", "source", "target", "output", "input", "status",
];
const FILLER: &[&str] = &[
    "the", "when", "after", "is", "wrong", "fails", "error", "unexpected", "returns", "with", "on", "crash",
    "incorrect", "while", "using", "seems", "broken", "again",
];
const APIS: &[&str] = &["append", "put", "get", "add", "remove", "size", "contains", "flush"];
const ONSETS: &[&str] = &["b", "k", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st", "pl", "gr", "sk"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ea"];

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

/// Distinct pronounceable lowercase words.
struct Words {
    used: BTreeSet<String>,
}

impl Words {
    fn new() -> Self {
        let used = VERBS
            .iter()
            .chain(COMMON)
            .chain(FILLER)
            .chain(APIS)
            .map(|w| w.to_string())
            .collect();
        Self { used }
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let syllables = rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(rng).expect("onsets"));
                w.push_str(VOWELS.choose(rng).expect("vowels"));
            }
            if rng.gen_bool(0.5) {
                w.push_str(["n", "r", "x", "l", "m"].choose(rng).expect("codas"));
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Topic {
    class: String,
    words: Vec<String>,
}

#[derive(Debug, Clone)]
struct Method {
    topic: usize,
    name: String,
    own: String,
    short: bool,
    comment: Option<String>,
    statements: Vec<String>,
    /// Guard statement added by fixes.
    guard: Option<String>,
    fixes: usize,
}

struct Generator {
    cfg: SyntheticConfig,
    rng: ChaCha8Rng,
    words: Words,
    topics: Vec<Topic>,
    methods: Vec<Method>,
}

impl Generator {
    fn pick<'a>(&mut self, pool: &'a [String]) -> &'a str {
        pool.choose(&mut self.rng).expect("nonempty pool")
    }

    fn common(&mut self) -> &'static str {
        COMMON.choose(&mut self.rng).expect("common")
    }

    fn statement(&mut self, topic: usize, own: &str) -> String {
        let words = self.topics[topic].words.clone();
        let t = self.pick(&words).to_string();
        let t2 = self.pick(&words).to_string();
        let c = self.common();
        let api = APIS.choose(&mut self.rng).expect("apis");
        let own_cap = capitalize(own);
        match self.rng.gen_range(0..6) {
            0 => format!("int {t}{own_cap} = {c}Helper.{api}{}(value);", capitalize(&t2)),
            1 => format!("{t}{}.{api}({own});", capitalize(c)),
            2 => format!("if ({own}{} > {c}Limit) {{ value = {t2}Count; }}", capitalize(&t)),
            3 => format!("value = {t}Cache.{api}(value + {own}Offset);"),
            4 => format!("{c}Count += {t}{}.{api}();", capitalize(&t2)),
            _ => format!("{own}{} = {t}Table.{api}({c});", capitalize(c)),
        }
    }

    fn long_method(&mut self, topic: usize) -> Method {
        let own = self.words.fresh(&mut self.rng);
        let words = self.topics[topic].words.clone();
        let noun = self.pick(&words).to_string();
        let verb = VERBS.choose(&mut self.rng).expect("verbs");
        let name = format!("{verb}{}{}", capitalize(&own), capitalize(&noun));
        let n = self.rng.gen_range(6..=10);
        let statements = (0..n).map(|_| self.statement(topic, &own)).collect();
        let t = self.pick(&words).to_string();
        let comment = Some(format!("{} the {own} {noun} of the {t} {}.", capitalize(verb), self.common()));
        Method {
            topic,
            name,
            own,
            short: false,
            comment,
            statements,
            guard: None,
            fixes: 0,
        }
    }

    fn short_method(&mut self, topic: usize, callee: usize) -> Method {
        let own = self.words.fresh(&mut self.rng);
        let words = self.topics[topic].words.clone();
        let noun = self.pick(&words).to_string();
        let verb = VERBS.choose(&mut self.rng).expect("verbs");
        let name = format!("{verb}{}{}", capitalize(&own), capitalize(&noun));
        let target = self.methods[callee].name.clone();
        let statements = vec![format!("value = {target}(value);")];
        let comment = self.rng.gen_bool(0.5).then(|| format!("Shortcut for the {noun}."));
        Method {
            topic,
            name,
            own,
            short: true,
            comment,
            statements,
            guard: None,
            fixes: 0,
        }
    }

    fn render(&self, topic: usize) -> String {
        let mut out = String::new();
        let class = &self.topics[topic].class;
        let _ = writeln!(out, "package synth;\n\npublic class {class} {{");
        for m in self.methods.iter().filter(|m| m.topic == topic) {
            if let Some(c) = &m.comment {
                let _ = writeln!(out, "    /** {c} */");
            }
            let _ = writeln!(out, "    public int {}(int value) {{", m.name);
            if let Some(g) = &m.guard {
                let _ = writeln!(out, "        {g}");
            }
            for s in &m.statements {
                let _ = writeln!(out, "        {s}");
            }
            let _ = writeln!(out, "        return value;\n    }}\n");
        }
        out.push_str("}\n");
        out
    }

    fn path(&self, topic: usize) -> String {
        format!("src/synth/{}.java", self.topics[topic].class)
    }
}

/// Raw records (sources, commits, reports) of a generated project.
pub fn generate_records(cfg: &SyntheticConfig) -> Vec<Record> {
    let mut g = Generator {
        cfg: *cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        words: Words::new(),
        topics: Vec::new(),
        methods: Vec::new(),
    };
    let per_topic = cfg.methods_per_topic.max(2);
    let n_topics = cfg.methods.div_ceil(per_topic).max(1);
    for _ in 0..n_topics {
        let words: Vec<String> = (0..8).map(|_| g.words.fresh(&mut g.rng)).collect();
        let class = format!("{}{}", capitalize(&words[0]), capitalize(&words[1]));
        g.topics.push(Topic { class, words });
    }
    for topic in 0..n_topics {
        let size = per_topic.min(cfg.methods - topic * per_topic);
        let shorts = ((size as f64 * cfg.short_share).round() as usize).min(size - 1);
        let first_long = g.methods.len();
        for _ in 0..size - shorts {
            let m = g.long_method(topic);
            g.methods.push(m);
        }
        let longs: Vec<usize> = (first_long..g.methods.len()).collect();
        for _ in 0..shorts {
            let callee = *longs.choose(&mut g.rng).expect("a long method");
            let m = g.short_method(topic, callee);
            g.methods.push(m);
        }
    }
    let mut all: Vec<usize> = (0..g.methods.len()).collect();
    all.shuffle(&mut g.rng);
    let hot: Vec<usize> = all[..cfg.hot_methods.min(all.len())].to_vec();

    let mut records = Vec::new();
    for topic in 0..n_topics {
        records.push(Record::File(SourceFile {
            path: g.path(topic),
            revision: 0,
            content: g.render(topic),
            deleted: false,
        }));
    }

    // events: report filings and their fixes, interleaved with maintenance
    #[derive(Debug)]
    enum Event {
        File(usize),
        Fix(usize),
    }
    let mut events: Vec<(Timestamp, usize, Event)> = Vec::new();
    let mut t = START;
    let mut faulty: Vec<Vec<usize>> = Vec::with_capacity(cfg.reports);
    for i in 0..cfg.reports {
        let gap: f64 = -(1.0 - g.rng.gen::<f64>()).ln() * 3.0;
        t += (gap * SECONDS_PER_DAY as f64) as Timestamp + 3600;
        let delay = g.rng.gen_range(0.1..2.0) * SECONDS_PER_DAY as f64;
        events.push((t, events.len(), Event::File(i)));
        events.push((t + delay as Timestamp, events.len(), Event::Fix(i)));
        let first = if g.rng.gen_bool(cfg.hot_share) {
            *hot.choose(&mut g.rng).expect("hot methods")
        } else {
            g.rng.gen_range(0..g.methods.len())
        };
        let mut set = vec![first];
        if g.rng.gen_bool(0.15) {
            let topic = g.methods[first].topic;
            let mates: Vec<usize> = (0..g.methods.len())
                .filter(|&m| m != first && g.methods[m].topic == topic)
                .collect();
            if let Some(&m) = mates.choose(&mut g.rng) {
                set.push(m);
            }
        }
        faulty.push(set);
    }
    events.sort_by_key(|(t, seq, _)| (*t, *seq));

    let mut revision = 0u32;
    let mut last_time = START;
    let mut reports = Vec::new();
    let mut commits = Vec::new();
    let mut commit = |g: &mut Generator, topics: BTreeSet<usize>, time: Timestamp, message: String, records: &mut Vec<Record>| {
        revision += 1;
        for topic in topics {
            records.push(Record::File(SourceFile {
                path: g.path(topic),
                revision,
                content: g.render(topic),
                deleted: false,
            }));
        }
        commits.push(CommitRecord {
            id: format!("c{revision:04}"),
            revision,
            timestamp: time,
            message,
            parents: Vec::new(),
            changes: Vec::new(),
        });
    };
    for (time, _, event) in events {
        if g.rng.gen_bool(cfg.maintenance_rate) {
            let at = last_time + (time - last_time) / 2;
            let m = g.rng.gen_range(0..g.methods.len());
            let topic = g.methods[m].topic;
            if g.methods[m].short {
                let c = g.common();
                g.methods[m].statements.truncate(1);
                g.methods[m].statements.push(format!("{c}Count++;"));
            } else {
                let k = g.rng.gen_range(0..g.methods[m].statements.len());
                let own = g.methods[m].own.clone();
                g.methods[m].statements[k] = g.statement(topic, &own);
            }
            let class = g.topics[topic].class.clone();
            commit(&mut g, BTreeSet::from([topic]), at, format!("Refactor {class} internals"), &mut records);
        }
        last_time = time;
        match event {
            Event::File(i) => reports.push(report_text(&mut g, i, &faulty[i], time)),
            Event::Fix(i) => {
                let mut topics = BTreeSet::new();
                for &m in &faulty[i] {
                    let topic = g.methods[m].topic;
                    let words = g.topics[topic].words.clone();
                    let fixes = g.methods[m].fixes;
                    let w = &words[fixes % words.len()];
                    g.methods[m].guard = Some(format!("if (value < 0) {{ value = {w}Default{fixes}; }}"));
                    g.methods[m].fixes += 1;
                    topics.insert(topic);
                }
                let summary = g.methods[faulty[i][0]].own.clone();
                commit(&mut g, topics, time, format!("Fix bug {}: handle {summary} edge case", i + 1), &mut records);
            }
        }
    }
    records.extend(commits.into_iter().map(Record::Commit));
    records.extend(reports.into_iter().map(Record::Report));
    records
}

fn report_text(g: &mut Generator, i: usize, faulty: &[usize], created_at: Timestamp) -> BugReportRecord {
    let mut words: Vec<String> = Vec::new();
    for &m in faulty {
        let method = g.methods[m].clone();
        if g.rng.gen_bool(g.cfg.mention_rate) {
            words.push(method.own.clone());
        }
        if g.rng.gen_bool(g.cfg.localized_rate) {
            words.push(format!("{}()", method.name));
        }
        let topic = g.topics[method.topic].words.clone();
        for _ in 0..g.rng.gen_range(2..=3) {
            words.push(g.pick(&topic).to_string());
        }
    }
    for _ in 0..g.rng.gen_range(3..=5) {
        words.push(g.common().to_string());
    }
    let other = g.rng.gen_range(0..g.topics.len());
    let noise = g.topics[other].words.clone();
    for _ in 0..g.rng.gen_range(1..=2) {
        words.push(g.pick(&noise).to_string());
    }
    words.shuffle(&mut g.rng);
    let mut text = String::new();
    for (k, w) in words.iter().enumerate() {
        if k > 0 {
            text.push(' ');
        }
        text.push_str(w);
        if g.rng.gen_bool(0.5) {
            text.push(' ');
            text.push_str(FILLER.choose(&mut g.rng).expect("filler"));
        }
    }
    text.push('.');
    BugReportRecord {
        id: (i + 1).to_string(),
        created_at,
        project: "synth".into(),
        text: capitalize(&text),
        tokens: Vec::new(),
        fixed_methods: BTreeSet::new(),
        fixed_by: Vec::new(),
    }
}

/// The normalized corpus of a generated project.
pub fn generate_corpus(cfg: &SyntheticConfig) -> Result<Corpus> {
    crate::corpus::ingest::normalize(generate_records(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            reports: 30,
            methods: 40,
            hot_methods: 8,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&small()).unwrap();
        assert_eq!(a, b);
        let s = a.summary();
        assert_eq!(s.reports, 30);
        assert!(a.reports.iter().all(|r| !r.fixed_methods.is_empty() && r.fixed_by.len() == 1));
        let first = a.snapshot(0).unwrap();
        assert_eq!(first.methods.len(), 40);
        let short = first.methods.iter().filter(|m| m.statement_count < 5).count();
        assert!((8..=16).contains(&short), "{short} short methods");
        assert!(first
            .methods
            .iter()
            .filter(|m| m.statement_count < 5)
            .all(|m| !m.callees.is_empty()));
        // every fix touches exactly the planted faulty methods in the before-fix revision
        for r in &a.reports {
            let rev = a.before_fix_revision(r).unwrap();
            let snap = a.snapshot(rev).unwrap();
            for m in &r.fixed_methods {
                assert!(snap.method(m).is_some());
            }
        }
        let other = generate_corpus(&SyntheticConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn default_size() {
        let c = generate_corpus(&SyntheticConfig::default()).unwrap();
        assert_eq!(c.reports.len(), 200);
        assert_eq!(c.snapshot(0).unwrap().methods.len(), 300);
    }
}
