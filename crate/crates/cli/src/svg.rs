//! Static bar charts, 800×500.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 110.0;

pub struct Bar {
    pub label: String,
    pub value: f64,
    pub error: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One bar per entry with ±error whiskers; the y axis starts at zero.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
    let top = bars
        .iter()
        .map(|b| finite(b.value) + finite(b.error))
        .fold(0.0, f64::max);
    let y_max = if top > 0.0 { top * 1.1 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |v: f64| TOP + plot_h * (1.0 - finite(v) / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="18">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    for tick in 0..=5 {
        let v = y_max * tick as f64 / 5.0;
        let ty = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}" stroke="#ddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            LEFT - 6.0,
            ty + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="#333"/>"##,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#333"/>"##,
        TOP + plot_h,
        WIDTH - RIGHT
    );

    let slot = plot_w / bars.len().max(1) as f64;
    for (i, bar) in bars.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let bw = slot * 0.6;
        let y0 = y(bar.value);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{y0:.2}" width="{bw:.2}" height="{:.2}" fill="#4477aa"/>"##,
            cx - bw / 2.0,
            TOP + plot_h - y0
        );
        if bar.error > 0.0 && bar.error.is_finite() {
            let (lo, hi) = (y(bar.value - bar.error), y(bar.value + bar.error));
            let _ = writeln!(
                s,
                r##"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="#222"/>"##
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            y0 - 6.0,
            format_tick(bar.value)
        );
        let ly = TOP + plot_h + 16.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{ly:.2}" text-anchor="end" font-size="12" transform="rotate(-30 {cx:.2} {ly:.2})">{}</text>"#,
            escape(&bar.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-2 || v.abs() >= 1e5 {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_bars() {
        let svg = bar_chart(
            "t",
            "y",
            &[
                Bar { label: "a<b".into(), value: 2.0, error: 0.1 },
                Bar { label: "c".into(), value: 1e-4, error: 0.0 },
            ],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"width="800" height="500""#));
        assert_eq!(svg.matches("fill=\"#4477aa\"").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }
}
