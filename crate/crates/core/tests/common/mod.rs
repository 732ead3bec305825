//! Helpers shared by the integration suites.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random but well-formed KSYNTH text.
pub struct DocGen {
    rng: ChaCha8Rng,
    next_name: usize,
}

const WORDS: [&str; 8] = ["alpha", "bravo", "delta", "echo", "kilo", "lima", "sierra", "tango"];

impl DocGen {
    pub fn new(seed: u64) -> Self {
        DocGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_name: 0,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next_name += 1;
        format!("{prefix}-{}", self.next_name)
    }

    fn word(&mut self) -> &'static str {
        WORDS.choose(&mut self.rng).unwrap()
    }

    fn string(&mut self) -> String {
        let pieces = [
            "plain",
            "with \\\"quotes\\\"",
            "tab\\there",
            "line\\nbreak",
            "back\\\\slash",
            "brace {x}",
            "caf\u{e9}",
            "",
        ];
        format!("\"{}\"", pieces.choose(&mut self.rng).unwrap())
    }

    fn number(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(-50i64..50).to_string(),
            1 => format!("{}", self.rng.gen_range(-1e3..1e3f64)),
            2 => format!("{:.3}", self.rng.gen_range(0.0..10.0f64)),
            _ => format!("{}e{}", self.rng.gen_range(1..9), self.rng.gen_range(-3..4)),
        }
    }

    fn value(&mut self, depth: usize) -> String {
        let top = if depth >= 3 { 5 } else { 7 };
        match self.rng.gen_range(0..top) {
            0 => self.string(),
            1 => self.number(),
            2 => format!(
                "{} \"{}\"",
                self.number(),
                ["m", "kg", "knots", "NTU"].choose(&mut self.rng).unwrap()
            ),
            3 => ["true", "false"].choose(&mut self.rng).unwrap().to_string(),
            4 => self.word().to_string(),
            5 => {
                let n = self.rng.gen_range(0..4);
                let items: Vec<String> = (0..n).map(|_| self.value(depth + 1)).collect();
                format!("[{}]", items.join(", "))
            }
            _ => {
                let n = self.rng.gen_range(0..4);
                let items: Vec<String> = (0..n).map(|i| format!("f{i} = {}", self.value(depth + 1))).collect();
                format!("{{{}}}", items.join(", "))
            }
        }
    }

    fn slot(&mut self, name: &str, depth: usize, out: &mut String) {
        if depth < 2 && self.rng.gen_bool(0.2) {
            out.push_str(&format!("slot {name} {{ "));
            for i in 0..self.rng.gen_range(1..4) {
                self.slot(&format!("s{i}"), depth + 1, out);
            }
            out.push_str("} ");
        } else {
            let v = self.value(depth);
            out.push_str(&format!("slot {name} = {v} "));
        }
    }

    fn ks(&mut self, out: &mut String, names: &mut Vec<String>) {
        let name = self.fresh("KS");
        out.push_str(&format!("ks {name} {{ "));
        for i in 0..self.rng.gen_range(0..5) {
            let name = format!("{}{i}", self.word());
            self.slot(&name, 0, out);
        }
        if self.rng.gen_bool(0.4) {
            out.push_str("explains \"status {a}\" ");
        }
        if self.rng.gen_bool(0.4) {
            out.push_str(&format!(
                "responder r1 {{ op compute param out = \"self.x + {}\" when \"true\" }} ",
                self.rng.gen_range(0..9)
            ));
        }
        if let (true, Some(src)) = (self.rng.gen_bool(0.3), names.last().cloned()) {
            out.push_str(&format!(
                "drel {} {{ from {src} share speed, nav/heading when \"target.x == 1\" priority {} }} ",
                self.fresh("D"),
                self.rng.gen_range(-2..3)
            ));
        }
        if let (true, Some(src)) = (self.rng.gen_bool(0.2), names.first().cloned()) {
            out.push_str(&format!("attractor {{ on {src}/x when \"source.x > 1\" run r1 }} "));
        }
        out.push_str("} ");
        names.push(name);
    }

    fn cloud(&mut self, depth: usize, out: &mut String, names: &mut Vec<String>) {
        out.push_str(&format!("cloud {} {{ ", self.fresh("Cloud")));
        if self.rng.gen_bool(0.2) {
            out.push_str("tag Dim-1 ");
        }
        for _ in 0..self.rng.gen_range(1..4) {
            self.ks(out, names);
        }
        if depth < 2 && self.rng.gen_bool(0.3) {
            self.cloud(depth + 1, out, names);
        }
        out.push_str("}\n");
    }

    fn rule(&mut self, out: &mut String) {
        out.push_str(&format!("rule {} {{ ", self.fresh("R")));
        if self.rng.gen_bool(0.5) {
            out.push_str(&format!("set {} ", self.word()));
        }
        if self.rng.gen_bool(0.3) {
            out.push_str(&format!("salience {} ", self.rng.gen_range(-5..6)));
        }
        out.push_str("fact Seen(?a, ?b) ");
        match self.rng.gen_range(0..4) {
            0 => out.push_str("match ?k in Cloud-1 \"?k.x > 2\" "),
            1 => out.push_str("absent Done(?a) "),
            2 => out.push_str("test \"?b != 3\" "),
            _ => out.push_str("minimize \"?b\" as ?lo "),
        }
        match self.rng.gen_range(0..5) {
            0 => out.push_str("then assert Done(?a) "),
            1 => out.push_str("then set ?a flag = \"true\" "),
            2 => out.push_str("then command go(\"?a\", \"?b + 1\") "),
            3 => out.push_str("then impulse LoT-1 "),
            _ => out.push_str("then halt "),
        }
        out.push_str("}\n");
    }

    fn lot(&mut self, ks: &[String], out: &mut String) {
        out.push_str(&format!("lot {} {{ ", self.fresh("LoT")));
        let steps = self.rng.gen_range(1..4);
        for i in 0..steps {
            let target = ks.choose(&mut self.rng).unwrap();
            out.push_str(&format!("step {target} "));
            match self.rng.gen_range(0..3) {
                0 => out.push_str("run r1 "),
                1 => out.push_str(&format!("rules {} ", self.word())),
                _ => {}
            }
            if i == 0 && self.rng.gen_bool(0.4) {
                out.push_str(&format!(
                    "fork f1 \"self.x\" {{ branch hi = {} -> next branch lo = {} -> step {} branch other default -> halt }} ",
                    self.value(2),
                    self.value(2),
                    steps
                ));
            }
        }
        out.push_str("}\n");
    }

    /// One document: a few clouds, plus optional rules, lines of thought
    /// and dimension declarations.
    pub fn document(&mut self) -> String {
        let mut out = String::new();
        let mut names = Vec::new();
        for _ in 0..self.rng.gen_range(1..4) {
            self.cloud(0, &mut out, &mut names);
        }
        if self.rng.gen_bool(0.5) {
            let target = names[0].clone();
            out.push_str(&format!(
                "dimension Dim-1 {{ description {} juncture J-1 assume {target}/x = {} }}\n",
                self.string(),
                self.value(1)
            ));
            out.push_str("juncture J-1 { dimension Dim-1 }\n");
        }
        for _ in 0..self.rng.gen_range(0..3) {
            self.rule(&mut out);
        }
        for _ in 0..self.rng.gen_range(0..3) {
            self.lot(&names, &mut out);
        }
        if self.rng.gen_bool(0.3) {
            out.push_str(&format!(
                "anomaly {} {{ path {}/x min 0 max {} }}\n",
                self.fresh("A"),
                names[0],
                self.rng.gen_range(1..10)
            ));
        }
        out
    }
}
