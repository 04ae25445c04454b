use std::fmt::Write;

use super::ScalingFit;

/// Seventeen significant digits: enough to round-trip every double.
pub fn csv_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Static log-log scatter plot of `fit.samples` with the fitted line.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, fit: &ScalingFit) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = fit.samples.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">log10 {}</text>"#, W / 2.0, H - 20.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle" font-family="sans-serif" font-size="12">log10 {}</text>"#, H / 2.0, H / 2.0, escape(y_label));
    let ln10 = std::f64::consts::LN_10;
    let line = |x: f64| (fit.exponent * x * ln10 + fit.intercept) / ln10;
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue"/>"#,
        sx(x0),
        sy(line(x0)),
        sx(x1),
        sy(line(x1))
    );
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="firebrick"/>"#, sx(x), sy(y));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">slope {:.4}, r^2 {:.4}</text>"#,
        M + 10.0,
        M + 15.0,
        fit.exponent,
        fit.r_squared
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
