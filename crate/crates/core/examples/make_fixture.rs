//! Regenerates the labeled Reuters-style fixture used by the integration tests.
//!
//!     cargo run --example make_fixture -- crates/core/tests/fixtures/newswire
//!
//! Writes 20 `.sgm` files of 20 records each. Every body mixes words drawn from
//! its topic's vocabulary with general newswire filler.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[rustfmt::skip]
const TOPICS: [(&str, &[&str]); 5] = [
    (
        "earn",
        &[
            "dividend", "quarterly", "shareholders", "profit", "earnings", "per", "share", "net",
            "income", "revenues", "payout", "record", "fiscal", "quarter", "cts", "shr", "loss",
            "operating", "results", "annual", "split", "stock", "payable", "prior", "year",
        ],
    ),
    (
        "grain",
        &[
            "wheat", "corn", "harvest", "bushels", "farmers", "agriculture", "soybeans", "crop",
            "export", "tonnes", "sorghum", "barley", "acreage", "usda", "planting", "yields",
            "maize", "rice", "growers", "elevator", "feedgrain", "subsidy", "drought", "silo",
            "milling",
        ],
    ),
    (
        "crude",
        &[
            "oil", "barrels", "opec", "petroleum", "refinery", "crude", "pipeline", "drilling",
            "gasoline", "output", "exploration", "wells", "offshore", "reserves", "brent",
            "posted", "bpd", "energy", "fuel", "tanker", "saudi", "quota", "heating", "diesel",
            "refining",
        ],
    ),
    (
        "trade",
        &[
            "tariffs", "imports", "deficit", "surplus", "protectionism", "negotiations", "gatt",
            "retaliation", "sanctions", "semiconductors", "bilateral", "exporters", "textile",
            "congress", "legislation", "dumping", "barriers", "customs", "quotas", "partners",
            "treaty", "commerce", "balance", "goods", "shipments",
        ],
    ),
    (
        "money-fx",
        &[
            "dollar", "yen", "currency", "exchange", "central", "bank", "intervention", "mark",
            "sterling", "rates", "monetary", "treasury", "liquidity", "money", "market",
            "reserves", "dealers", "franc", "bundesbank", "interest", "forex", "swap", "banks",
            "stabilize", "louvre",
        ],
    ),
];

#[rustfmt::skip]
const FILLER: &[&str] = &[
    "the", "said", "a", "of", "in", "and", "to", "for", "it", "on", "that", "was", "its", "is",
    "by", "with", "from", "at", "be", "will", "would", "he", "an", "has", "not", "this", "last",
    "also", "which", "after", "than", "but", "officials", "spokesman", "reuter", "week", "told",
    "reporters", "government", "company", "new", "today", "expected", "about", "more", "two",
    "three", "million", "billion", "pct", "mln", "dlrs",
];

const FILES: usize = 20;
const PER_FILE: usize = 20;

fn sentence(rng: &mut ChaCha8Rng, topic: &[&str], topic_share: f64) -> String {
    let len = rng.random_range(8..16);
    let words: Vec<&str> = (0..len)
        .map(|_| {
            let pool = if rng.random_bool(topic_share) {
                topic
            } else {
                FILLER
            };
            *pool.choose(rng).expect("non-empty pool")
        })
        .collect();
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/newswire".into())
        .into();
    fs::create_dir_all(&out).expect("create output directory");
    let mut rng = ChaCha8Rng::seed_from_u64(1987);
    let mut newid = 1000;
    for f in 0..FILES {
        let mut text = String::from("<!DOCTYPE lewis SYSTEM \"lewis.dtd\">\n");
        for r in 0..PER_FILE {
            // round-robin topics so every file holds all of them
            let (topic, words) = TOPICS[(f * PER_FILE + r) % TOPICS.len()];
            newid += 1;
            let share = rng.random_range(0.25..0.45);
            let body: Vec<String> = (0..rng.random_range(3..7))
                .map(|_| sentence(&mut rng, words, share))
                .collect();
            let title = sentence(&mut rng, words, 0.6).to_ascii_uppercase();
            let _ = write!(
                text,
                "<REUTERS TOPICS=\"YES\" LEWISSPLIT=\"TRAIN\" NEWID=\"{newid}\">\n\
                 <DATE>{:02}-MAR-1987 {:02}:{:02}:00.00</DATE>\n\
                 <TOPICS><D>{topic}</D></TOPICS>\n\
                 <TEXT>\n<TITLE>{title}</TITLE>\n<BODY>{}\n Reuter\n&#3;</BODY></TEXT>\n</REUTERS>\n",
                1 + (newid % 28),
                newid % 24,
                newid % 60,
                body.join(" ")
            );
        }
        let path = out.join(format!("reut2-{f:03}.sgm"));
        fs::write(&path, text).expect("write fixture file");
    }
    println!("wrote {} records to {}", FILES * PER_FILE, out.display());
}
