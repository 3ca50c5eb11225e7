//! Per-level generation rate and mean bot demonstration length.
//!
//! `cargo run --release --example levelstats -- 1000`

use std::time::Instant;

use babyworld::levels::{LevelId, make_mission};

fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    for level in LevelId::ALL {
        let t = Instant::now();
        let (mut ok, mut len) = (0u64, 0usize);
        for seed in 0..n {
            match make_mission(level, seed) {
                Ok(m) => {
                    ok += 1;
                    len += m.witness.len();
                }
                Err(e) => println!("  {e}"),
            }
        }
        let mean = len as f64 / ok.max(1) as f64;
        println!("{:16} {ok}/{n} generated, mean length {mean:.2}, {:?}", level.name(), t.elapsed());
    }
}
