//! CSV rendering. Numbers use six significant digits in the style of C's `%g`.

use anomap::{EvalReport, Method, MethodEval};

pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{v:.*}", (5 - exp).max(0) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Method name and sigma columns: `ssim` rows carry their sigma, the
/// ensemble and l1 leave it empty.
pub fn method_columns(m: Method) -> (&'static str, String) {
    match m {
        Method::L1 => ("l1", String::new()),
        Method::Ssim(s) => ("ssim", sig6(s)),
        Method::SsimEns => ("ssim-ens", String::new()),
    }
}

pub const EVALUATE_HEADER: &str = "method,sigma,threshold,dataset_dice,volume_id,volume_dice";
pub const SWEEP_HEADER: &str = "method,sigma,dataset_dice,threshold";

/// One row per test volume and method.
pub fn evaluate_csv(evals: &[MethodEval]) -> String {
    let mut out = format!("{EVALUATE_HEADER}\n");
    for e in evals {
        let (name, sigma) = method_columns(e.method);
        for v in &e.per_volume_dice {
            out.push_str(&format!(
                "{name},{sigma},{},{},{},{}\n",
                sig6(e.chosen_threshold as f64),
                sig6(e.dataset_dice),
                v.index,
                v.dice.map(sig6).unwrap_or_default()
            ));
        }
    }
    out
}

pub fn sweep_csv(report: &EvalReport) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for p in &report.points {
        let (name, sigma) = method_columns(p.method);
        out.push_str(&format!(
            "{name},{sigma},{},{}\n",
            sig6(p.dataset_dice),
            sig6(p.chosen_threshold as f64)
        ));
    }
    out
}
