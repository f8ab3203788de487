//! Evaluates several bounds on one shared context and prints the resulting
//! certificates, tightest first. Run with `cargo run --example certify`.

use pacbayes::bounded::{self, BoundContext};
use pacbayes::general::{chernoff_analogue, EssSupInfo};
use pacbayes::tails::TailFamily;
use pacbayes::{NatsValue, Probability};

fn main() -> pacbayes::Result<()> {
    // 1000 samples, 95% confidence, kl(posterior || prior) = 5 nats,
    // empirical risk 0.1 under a loss in [0, 1].
    let ctx = BoundContext::new(1000, 0.05, NatsValue::new(5.0)?, Probability::new(0.1)?)?;

    let mut certs = vec![
        bounded::mcallester(&ctx),
        bounded::seeger_langford(&ctx),
        bounded::mixed_rate(&ctx),
        bounded::thiemann(&ctx),
    ];

    // The same context drives the general-tail route once a tail family is
    // chosen; a [0, 1] loss is sub-Gaussian with sigma^2 = 1/4.
    let family = TailFamily::sub_gaussian(0.25)?;
    certs.push(chernoff_analogue(&ctx, &family, EssSupInfo::known(1.0)?));

    certs.sort_by(|a, b| a.value.total_cmp(&b.value));
    for cert in &certs {
        println!("{:>16}  {:.6}", cert.bound_id.name(), cert.value);
    }
    Ok(())
}
