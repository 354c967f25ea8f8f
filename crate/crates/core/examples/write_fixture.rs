//! Writes the synthetic fixture (config, train/test, lexicon, embeddings) to a directory.
use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let n = args.next().map_or(200, |s| s.parse().expect("instance count"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let files = finsent::pipeline::fixtures::write_fixture(&dir, n, seed)?;
    println!("{}", files.config.display());
    Ok(())
}
