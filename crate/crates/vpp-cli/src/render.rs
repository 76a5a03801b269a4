//! Deterministic SVG rendering of report tables and offer curves.
//!
//! The charts are self-contained static SVG: fixed layout constants, a small
//! embedded stylesheet, and two-decimal coordinates so that equal inputs
//! always produce identical bytes.

use std::fmt::Write as _;

/// One row of a solve report: interval, activation probability, and the
/// per-interval profit decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    pub prob_active: f64,
    pub rho_da: f64,
    pub rho_act: f64,
    pub rho_pas: f64,
    pub cost: f64,
}

/// One step of an offer curve file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub market: String,
    pub k: usize,
    pub price: f64,
    pub quantity: f64,
}

const STYLE: &str = "text { font: 12px sans-serif; fill: #333; } \
.title { font: 13px sans-serif; font-weight: bold; fill: #111; } \
.axis { stroke: #666; stroke-width: 1; } \
.grid { stroke: #ddd; stroke-width: 1; } \
.rule { stroke: #999; stroke-width: 1; } \
.bar { fill: #33699c; } \
.step { stroke: #33699c; stroke-width: 2.5; fill: none; } \
.step[data-market=\"reg-up\"] { stroke: #2d7d46; } \
.step[data-market=\"reg-down\"] { stroke: #b5442d; }";

fn open_svg(width: f64, height: f64) -> String {
    let mut svg = String::with_capacity(4096);
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(svg, "  <style>{STYLE}</style>");
    svg
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            other => out.push(other),
        }
    }
    out
}

/// Bar chart of the probability of offering actively in each interval.
/// An empty input renders the axes alone.
pub fn probability_chart(rows: &[ReportRow]) -> String {
    const LEFT: f64 = 60.0;
    const TOP: f64 = 34.0;
    const SLOT: f64 = 26.0;
    const PLOT_H: f64 = 170.0;
    let plot_w = (rows.len() as f64 * SLOT).max(240.0);
    let width = LEFT + plot_w + 20.0;
    let height = TOP + PLOT_H + 36.0;
    let base = TOP + PLOT_H;

    let mut svg = open_svg(width, height);
    let _ = writeln!(
        svg,
        "  <text class=\"title\" x=\"{LEFT:.0}\" y=\"18\">Probability of active participation</text>"
    );
    for tick in 0..=4u32 {
        let frac = f64::from(tick) / 4.0;
        let y = TOP + PLOT_H * (1.0 - frac);
        let _ = writeln!(
            svg,
            "  <line class=\"grid\" x1=\"{LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\"/>",
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{frac:.2}</text>",
            LEFT - 8.0,
            y + 4.0
        );
    }
    let label_every = rows.len().div_ceil(16);
    for (idx, row) in rows.iter().enumerate() {
        let x = LEFT + idx as f64 * SLOT + 4.0;
        let bar_h = row.prob_active.clamp(0.0, 1.0) * PLOT_H;
        let y = base - bar_h;
        let _ = writeln!(
            svg,
            "  <rect class=\"bar\" data-k=\"{}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" \
             height=\"{bar_h:.2}\"/>",
            row.k,
            SLOT - 8.0
        );
        if idx % label_every.max(1) == 0 {
            let _ = writeln!(
                svg,
                "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
                x + (SLOT - 8.0) / 2.0,
                base + 16.0,
                row.k
            );
        }
    }
    let _ = writeln!(
        svg,
        "  <line class=\"axis\" x1=\"{LEFT:.2}\" y1=\"{TOP:.2}\" x2=\"{LEFT:.2}\" y2=\"{base:.2}\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line class=\"axis\" x1=\"{LEFT:.2}\" y1=\"{base:.2}\" x2=\"{:.2}\" y2=\"{base:.2}\"/>",
        LEFT + plot_w
    );
    svg.push_str("</svg>\n");
    svg
}

/// Step plot of offer curves. Rows are grouped by market and interval; within
/// a group the quantity axis accumulates, so every input row becomes exactly
/// one horizontal segment (`path` element with class `step`).
pub fn curve_chart(title: &str, rows: &[CurveRow]) -> String {
    const LEFT: f64 = 70.0;
    const TOP: f64 = 34.0;
    const PLOT_W: f64 = 420.0;
    const PLOT_H: f64 = 220.0;
    let width = LEFT + PLOT_W + 20.0;
    let height = TOP + PLOT_H + 44.0;
    let base = TOP + PLOT_H;

    let mut groups: Vec<((&str, usize), Vec<usize>)> = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let key = (row.market.as_str(), row.k);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(idx),
            None => groups.push((key, vec![idx])),
        }
    }
    let mut max_q = 0.0f64;
    for (_, members) in &groups {
        let total: f64 = members.iter().map(|&i| rows[i].quantity).sum();
        max_q = max_q.max(total);
    }
    if max_q <= 0.0 {
        max_q = 1.0;
    }
    let (mut price_min, mut price_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in rows {
        price_min = price_min.min(row.price);
        price_max = price_max.max(row.price);
    }
    if rows.is_empty() {
        price_min = 0.0;
        price_max = 1.0;
    }
    if price_max - price_min < 1e-9 {
        price_min -= 1.0;
        price_max += 1.0;
    }
    let pad = (price_max - price_min) * 0.08;
    price_min -= pad;
    price_max += pad;

    let sx = |q: f64| LEFT + q / max_q * PLOT_W;
    let sy = |p: f64| TOP + (price_max - p) / (price_max - price_min) * PLOT_H;

    let mut svg = open_svg(width, height);
    let _ = writeln!(
        svg,
        "  <text class=\"title\" x=\"{LEFT:.0}\" y=\"18\">{}</text>",
        escape(title)
    );
    for tick in 0..=4u32 {
        let frac = f64::from(tick) / 4.0;
        let price = price_min + frac * (price_max - price_min);
        let y = sy(price);
        let _ = writeln!(
            svg,
            "  <line class=\"grid\" x1=\"{LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\"/>",
            LEFT + PLOT_W
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{price:.2}</text>",
            LEFT - 8.0,
            y + 4.0
        );
        let q = frac * max_q;
        let x = sx(q);
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{q:.1}</text>",
            base + 16.0
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">quantity [MWh]</text>",
        LEFT + PLOT_W / 2.0,
        base + 34.0
    );
    let _ = writeln!(
        svg,
        "  <text transform=\"translate(16 {:.2}) rotate(-90)\" \
         text-anchor=\"middle\">price [EUR/MWh]</text>",
        TOP + PLOT_H / 2.0
    );
    for (_, members) in &groups {
        let mut cum = 0.0;
        for &idx in members {
            let row = &rows[idx];
            let x0 = sx(cum);
            cum += row.quantity;
            let x1 = sx(cum);
            let y = sy(row.price);
            let _ = writeln!(
                svg,
                "  <path class=\"step\" data-market=\"{}\" data-k=\"{}\" \
                 d=\"M{x0:.2} {y:.2} H{x1:.2}\"/>",
                escape(&row.market),
                row.k
            );
        }
    }
    let _ = writeln!(
        svg,
        "  <line class=\"axis\" x1=\"{LEFT:.2}\" y1=\"{TOP:.2}\" x2=\"{LEFT:.2}\" y2=\"{base:.2}\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line class=\"axis\" x1=\"{LEFT:.2}\" y1=\"{base:.2}\" x2=\"{:.2}\" y2=\"{base:.2}\"/>",
        LEFT + PLOT_W
    );
    svg.push_str("</svg>\n");
    svg
}

/// Tabular rendering of the per-interval profit decomposition.
pub fn decomposition_table(rows: &[ReportRow]) -> String {
    const COLS: [(&str, f64); 5] = [
        ("k", 70.0),
        ("day-ahead", 180.0),
        ("active", 280.0),
        ("passive", 380.0),
        ("cost", 480.0),
    ];
    const TOP: f64 = 30.0;
    const ROW_H: f64 = 18.0;
    let width = 510.0;
    let height = TOP + ROW_H * (rows.len() as f64 + 1.0) + 20.0;

    let mut svg = open_svg(width, height);
    let _ = writeln!(
        svg,
        "  <text class=\"title\" x=\"30\" y=\"18\">Expected profit decomposition</text>"
    );
    let header_y = TOP + 14.0;
    for (name, x) in COLS {
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.0}\" y=\"{header_y:.2}\" text-anchor=\"end\">{name}</text>"
        );
    }
    let rule_y = header_y + 5.0;
    let _ = writeln!(
        svg,
        "  <line class=\"rule\" x1=\"30\" y1=\"{rule_y:.2}\" x2=\"{:.0}\" y2=\"{rule_y:.2}\"/>",
        width - 30.0
    );
    for (r, row) in rows.iter().enumerate() {
        let y = header_y + ROW_H * (r as f64 + 1.0);
        let cells = [
            format!("{}", row.k),
            format!("{:.2}", row.rho_da),
            format!("{:.2}", row.rho_act),
            format!("{:.2}", row.rho_pas),
            format!("{:.2}", row.cost),
        ];
        for ((_, x), cell) in COLS.iter().zip(&cells) {
            let _ = writeln!(
                svg,
                "  <text x=\"{x:.0}\" y=\"{y:.2}\" text-anchor=\"end\">{cell}</text>"
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_row(k: usize, prob: f64) -> ReportRow {
        ReportRow {
            k,
            prob_active: prob,
            rho_da: 10.0,
            rho_act: 1.0,
            rho_pas: -2.0,
            cost: 3.0,
        }
    }

    #[test]
    fn escapes_markup_characters() {
        assert_eq!(escape("a<b>&\"c\""), "a&lt;b&gt;&amp;&quot;c&quot;");
        assert_eq!(escape("plain"), "plain");
    }

    #[test]
    fn probability_bars_scale_and_clamp() {
        let svg = probability_chart(&[report_row(1, 0.5), report_row(2, 1.8)]);
        assert_eq!(svg.matches("class=\"bar\"").count(), 2);
        assert!(svg.contains("height=\"85.00\""), "half probability is half height");
        assert!(svg.contains("height=\"170.00\""), "probability clamps at full height");
    }

    #[test]
    fn empty_probability_chart_is_wellformed() {
        let svg = probability_chart(&[]);
        assert!(svg.starts_with("<svg "));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("class=\"bar\"").count(), 0);
        assert_eq!(svg.matches("class=\"axis\"").count(), 2);
    }

    #[test]
    fn curve_segments_accumulate_within_a_group() {
        let rows = [
            CurveRow { market: "day-ahead".into(), k: 1, price: 20.0, quantity: 5.0 },
            CurveRow { market: "day-ahead".into(), k: 1, price: 30.0, quantity: 5.0 },
            CurveRow { market: "day-ahead".into(), k: 2, price: 25.0, quantity: 5.0 },
        ];
        let svg = curve_chart("t", &rows);
        assert_eq!(svg.matches("class=\"step\"").count(), 3);
        let spans: Vec<(&str, &str)> = svg
            .lines()
            .filter(|l| l.contains("class=\"step\""))
            .map(|l| {
                let d = l.split("d=\"M").nth(1).unwrap();
                let (start, rest) = d.split_once(' ').unwrap();
                let end = rest.split_once('H').unwrap().1.trim_end_matches("\"/>");
                (start, end)
            })
            .collect();
        assert_eq!(spans[0].1, spans[1].0, "second step starts where the first ends");
        assert_eq!(spans[0].0, spans[2].0, "a new interval restarts at zero quantity");
    }

    #[test]
    fn decomposition_rows_render_fixed_decimals() {
        let svg = decomposition_table(&[report_row(1, 0.0)]);
        assert!(svg.contains(">10.00<"));
        assert!(svg.contains(">-2.00<"));
        assert_eq!(svg.matches("text-anchor=\"end\"").count(), 10);
    }
}
