//! Log-scale line plot of a results CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 170.0, 30.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Default)]
struct Series {
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn column<'a>(header: &[&str], row: &[&'a str], name: &str) -> Option<&'a str> {
    let i = header.iter().position(|h| *h == name)?;
    row.get(i).copied().filter(|v| !v.is_empty())
}

/// Renders every decoder series, plus the bound columns, from `csv`.
///
/// The x axis is `n`, or the blend `a` when all rows share one `n`. Rows with
/// zero errors are drawn at half the resolution `1/(2·trials)`.
pub fn render(csv: &str, title: &str) -> Result<String, String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or("empty CSV")?.split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    if rows.is_empty() {
        return Err("no result rows to plot".into());
    }
    let num = |row: &[&str], name: &str| -> Option<f64> { column(&header, row, name)?.parse().ok() };
    let ns: Vec<f64> = rows.iter().filter_map(|r| num(r, "n")).collect();
    let x_is_a = ns.windows(2).all(|w| w[0] == w[1]) && rows.iter().all(|r| num(r, "a").is_some());
    let x_name = if x_is_a { "a" } else { "n" };
    let ks: Vec<&str> = rows.iter().filter_map(|r| column(&header, r, "k")).collect();
    let many_k = ks.windows(2).any(|w| w[0] != w[1]);

    let mut series: BTreeMap<String, Series> = BTreeMap::new();
    for row in &rows {
        let x = num(row, x_name).ok_or("row without x value")?;
        let trials = num(row, "trials").unwrap_or(1.0);
        let p = num(row, "p_err").ok_or("row without p_err")?;
        let mut label = column(&header, row, "decoder").unwrap_or("?").to_string();
        if !x_is_a {
            if let Some(a) = column(&header, row, "a") {
                label.push_str(&format!(" a={a}"));
            }
        }
        if many_k {
            label.push_str(&format!(" k={}", column(&header, row, "k").unwrap_or("?")));
        }
        series
            .entry(label)
            .or_default()
            .points
            .push((x, if p > 0.0 { p } else { 0.5 / trials }));
        for (name, tag) in [("bound_shannon", "shannon bound"), ("bound_prop1", "prop1 bound")] {
            if let Some(b) = num(row, name).filter(|b| *b > 0.0) {
                let s = series.entry(tag.to_string()).or_default();
                s.dashed = true;
                if !s.points.iter().any(|pt| pt.0 == x) {
                    s.points.push((x, b));
                }
            }
        }
    }

    let all = series.values().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let (l, r, t, b) = MARGIN;
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (WIDTH - l - r);
    let py = |y: f64| t + (y1 - y.log10()) / (y1 - y0) * (HEIGHT - t - b);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - l - r,
        HEIGHT - t - b
    );
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{l}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            WIDTH - r,
            l - 4.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            HEIGHT - b + 16.0,
            trim(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_name}</text><text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">error probability</text>"#,
        l + (WIDTH - l - r) / 2.0,
        HEIGHT - 12.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (i, (label, s)) in series.iter_mut().enumerate() {
        s.points.sort_by(|p, q| p.0.total_cmp(&q.0));
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
        let ly = t + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - r + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn trim(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "figure,decoder,codebook,m,k,P,d,a,n,trials,errors,p_err,ci_lo,ci_hi,bound_shannon,bound_prop1,seed
3,mdd,simplex,3,1,0.1,,,20,100,30,0.3,0.2,0.4,0.1,,1
3,mdd,simplex,3,1,0.1,,,40,100,0,0,0,0.03,0.05,,1
3,ols_mdd,simplex,3,1,0.1,,,20,100,40,0.4,0.3,0.5,0.1,,1
# INCOMPLETE
";

    #[test]
    fn one_polyline_per_series() {
        let svg = render(CSV, "fig").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("shannon bound"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(render("", "x").is_err());
        assert!(render(CSV.lines().next().unwrap(), "x").is_err());
    }
}
