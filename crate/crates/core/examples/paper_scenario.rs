//! Low- and high-gain designs on the reference frequency plant, compared with
//! two fixed-gain loops over a few disturbance seeds.

use linf_core::linalg::Matrix;
use linf_core::model::{build_frequency_model, BuConvention, FrequencyParams};
use linf_core::sim::{gen_disturbance, simulate, Feedback};
use linf_core::synthesis::{synth_fs, SearchSpec};

fn main() -> Result<(), linf_core::Error> {
    let m = build_frequency_model(&FrequencyParams::paper(), BuConvention::PaperLiteral)?;
    let lg = synth_fs(&m, m.input_limit, 1.0, &SearchSpec::default())?;
    println!("K = {:?}, star-norm = {:.5}", lg.k.scale(m.input_scale).row_slice(0), lg.certificate.star_norm);

    let loops = [
        ("low_gain", Feedback::Design(lg.clone())),
        ("high_gain_d10", Feedback::Design(lg.with_delta(10.0)?)),
        ("high_gain_d100", Feedback::Design(lg.with_delta(100.0)?)),
        ("lqr_literal", Feedback::Gain(Matrix::row(&[0.138, 0.0045]).scale(1.0 / m.input_scale))),
        ("poles_literal", Feedback::Gain(Matrix::row(&[1.70, 0.48]).scale(1.0 / m.input_scale))),
    ];
    for seed in 0..5 {
        let dist = gen_disturbance(seed, 60.0, 5.0, 1.0)?;
        print!("seed {seed}:");
        for (name, fb) in &loops {
            let r = simulate(&m, fb, None, &dist, 1e-3, &[0.0, 0.0])?;
            print!(" {name} {:.5}", r.peak_abs_freq);
        }
        println!();
    }
    Ok(())
}
