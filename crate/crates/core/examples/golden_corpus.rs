//! Write the golden protocol corpus: one message of every kind and every
//! action and payload variant, recorded from the fixture tasks.
//!
//!     cargo run --example golden_corpus [-- OUT]

fn main() -> std::io::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "../../protocol/golden.jsonl".into());
    let corpus = camsearch::protocol::golden_corpus();
    std::fs::write(&out, &corpus)?;
    println!("{} messages -> {out}", corpus.lines().count());
    Ok(())
}
