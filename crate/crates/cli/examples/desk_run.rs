use rising_cli::*;
use std::time::Instant;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "/tmp/desk_probe".into());
    let cfg = ExperimentConfig::desk_default(&out);
    let t = Instant::now();
    cmd_generate_data(&cfg, false).unwrap();
    println!("[{:.0}s] data done", t.elapsed().as_secs_f64());
    cmd_simulate(&cfg, false).unwrap();
    println!("[{:.0}s] simulate done", t.elapsed().as_secs_f64());
    let m = cmd_build_targets(&cfg, false).unwrap();
    let ks: Vec<usize> = m.entries.iter().filter_map(|e| e.k_star).collect();
    println!("[{:.0}s] targets done; kstar range [{:?}, {:?}], failures {}",
        t.elapsed().as_secs_f64(), ks.iter().min(), ks.iter().max(),
        m.entries.iter().filter(|e| e.solver_error.is_some()).count());
    cmd_build_ris(&cfg, false).unwrap();
    println!("[{:.0}s] ris k=10 done", t.elapsed().as_secs_f64());
    let tr = cmd_train(&cfg, false).unwrap();
    println!("[{:.0}s] train done, final loss {:.6e}", t.elapsed().as_secs_f64(), tr.final_loss);
    let ev = cmd_evaluate(&cfg, &tr.checkpoint).unwrap();
    println!("{}", ev.table);
    let mean_ris: f64 = ev.learnability.iter().map(|(_, a, _)| a).sum::<f64>() / ev.learnability.len() as f64;
    let mean_net: f64 = ev.learnability.iter().map(|(_, _, b)| b).sum::<f64>() / ev.learnability.len() as f64;
    println!("learnability: mean RMSE(ris,is)={mean_ris:.5} mean RMSE(net,is)={mean_net:.5} ratio={:.3}", mean_net / mean_ris);
    println!("[{:.0}s] all done", t.elapsed().as_secs_f64());
}
