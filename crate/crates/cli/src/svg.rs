//! A plain SVG line chart for daily return series.

use std::fmt::Write as _;

use chrono::NaiveDate;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLOURS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One polyline per series over `dates`, with a zero line, y ticks in
/// percent and a legend on the right.
pub fn line_chart(title: &str, dates: &[NaiveDate], series: &[(String, Vec<f64>)]) -> String {
    let values = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .filter(|v| v.is_finite());
    let (mut lo, mut hi) = values.fold((0.0f64, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
    if hi - lo < 1e-12 {
        lo -= 0.01;
        hi += 0.01;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = dates.len().max(2);
    let x = |k: usize| LEFT + plot_w * k as f64 / (n - 1) as f64;
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}%</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            100.0 * v
        );
    }
    let _ = writeln!(
        out,
        r##"<line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#000000" stroke-width="0.8"/>"##,
        y(0.0),
        LEFT + plot_w
    );
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#333333"/>"##
    );
    if let (Some(first), Some(last)) = (dates.first(), dates.last()) {
        let base = HEIGHT - BOTTOM + 18.0;
        let _ = writeln!(
            out,
            r#"<text x="{LEFT}" y="{base:.1}" text-anchor="start">{first}</text>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{base:.1}" text-anchor="end">{last}</text>"#,
            LEFT + plot_w
        );
    }

    for (i, (name, vals)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let points: Vec<String> = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| format!("{:.1},{:.1}", x(k), y(*v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let d0 = NaiveDate::from_ymd_opt(2024, 1, 2).unwrap();
        let dates = vec![d0, d0.succ_opt().unwrap(), d0.succ_opt().unwrap().succ_opt().unwrap()];
        let svg = line_chart(
            "A & B",
            &dates,
            &[
                ("a".into(), vec![0.01, -0.02, 0.0]),
                ("b<1>".into(), vec![0.0, 0.0, 0.005]),
            ],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("A &amp; B") && svg.contains("b&lt;1&gt;"));
        assert_eq!(
            svg,
            line_chart(
                "A & B",
                &dates,
                &[
                    ("a".into(), vec![0.01, -0.02, 0.0]),
                    ("b<1>".into(), vec![0.0, 0.0, 0.005])
                ]
            )
        );
    }

    #[test]
    fn flat_series_still_draws() {
        let d0 = NaiveDate::from_ymd_opt(2024, 1, 2).unwrap();
        let svg = line_chart("flat", &[d0], &[("z".into(), vec![0.0])]);
        assert!(!svg.contains("NaN"));
    }
}
