//! Run configuration as plain `key = value` text.
//!
//!     cargo run --example config_file

use cellevo::config::{parse_config, KEYS};

fn main() -> cellevo::Result<()> {
    let cfg = parse_config(
        "# quick look at a smaller search\n\
         seed = 9\n\
         algo = lm, scg\n\
         topology = vonneumann\n\
         rule_generations = 4   # instead of 18\n",
    )?;
    println!("{} keys understood; effective configuration:\n", KEYS.len());
    print!("{}", cfg.render());
    match parse_config("epochs = 9\n").and_then(|c| c.validate().map(|_| c)) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("\nrejected: {e}"),
    }
    Ok(())
}
