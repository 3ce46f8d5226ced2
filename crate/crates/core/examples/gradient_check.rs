//! Compares backpropagation-through-time gradients with central finite
//! differences on a handful of tiny networks.
//!
//! cargo run --release --example gradient_check

use slacast::nn::{check_gradients, LossConfig, LstmSpec};

fn main() -> slacast::Result<()> {
    for (i, (width, hidden, layers, lookback)) in [(1, 2, 1, 3), (2, 3, 1, 5), (3, 4, 2, 6), (2, 4, 2, 4)].into_iter().enumerate() {
        let spec = LstmSpec::new(width, hidden, layers, lookback)?;
        for w in [1.0, 19.0] {
            let r = check_gradients(&spec, &LossConfig::new(w)?, i as u64)?;
            println!(
                "D={width} H={hidden} layers={layers} L={lookback} w={w:<4} params={:<4} max rel error {:.2e} {}",
                r.param_count,
                r.max_rel_error,
                if r.passes(1e-4) { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
