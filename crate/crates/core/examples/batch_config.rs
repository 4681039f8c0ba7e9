//! Driving the batch front end from code: a TOML config, flag overrides,
//! and the same report the `hyperknn evaluate` command writes.

use hyperknn::cli::{cmd_evaluate, report_json, RunArgs, RunConfig};

fn main() -> hyperknn::Result<()> {
    let dir = std::env::temp_dir().join("hyperknn-batch-example");
    std::fs::create_dir_all(&dir)?;
    let input = dir.join("ratings.tsv");
    let mut text = String::new();
    for u in 0..40 {
        for i in 0..12 {
            if (u * 7 + i * 3) % 5 < 3 {
                let r = 1 + (i % 5 + u % 2) % 5;
                text += &format!("u{u}\ti{i}\t{r}\n");
            }
        }
    }
    std::fs::write(&input, text)?;

    let config_path = dir.join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            "input = {:?}\ntask = \"label\"\nq = 2\nk_max = 5\nepsilons = [1.0, 0.5]\nseed = 3\n",
            input.to_str().unwrap()
        ),
    )?;
    let from_file = RunConfig::load(&config_path)?;
    println!("from file: task {:?}, k_max {}, seed {}", from_file.task, from_file.k_max, from_file.seed);

    // flags win over the file
    let args =
        RunArgs { config: Some(config_path), seed: Some(4), method: Some("embedded".into()), ..RunArgs::default() };
    let config = args.resolve()?;
    println!("resolved:  task {:?}, method {:?}, seed {}", config.task, config.method, config.seed);

    let outcome = cmd_evaluate(&config)?;
    print!("{}", outcome.report.render());
    println!("report.json is {} bytes", report_json(&outcome.report)?.len());
    Ok(())
}
