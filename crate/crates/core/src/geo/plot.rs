use std::fmt::Write as _;

use super::FrequencyTable;
use crate::corpus::Polarity;

const BAR_HEIGHT: usize = 22;
const LABEL_WIDTH: usize = 160;
const PLOT_WIDTH: usize = 360;

fn color(p: Polarity) -> &'static str {
    match p {
        Polarity::Positive => "#2b8a3e",
        Polarity::Negative => "#c92a2a",
        Polarity::Neutral => "#868e96",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bar chart of one frequency table as a standalone SVG.
pub fn frequency_svg(table: &FrequencyTable) -> String {
    let max = table.entries.iter().map(|(_, c)| *c).max().unwrap_or(1).max(1);
    let width = LABEL_WIDTH + PLOT_WIDTH + 60;
    let height = 40 + BAR_HEIGHT * table.entries.len().max(1);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"  <text x="8" y="20" font-size="14">{} aspects</text>"#, table.polarity.as_str());
    for (i, (aspect, count)) in table.entries.iter().enumerate() {
        let y = 32 + i * BAR_HEIGHT;
        let w = (*count as f64 / max as f64 * PLOT_WIDTH as f64).round() as usize;
        let _ = writeln!(
            svg,
            r#"  <text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL_WIDTH - 6,
            y + 14,
            escape(aspect)
        );
        let _ = writeln!(
            svg,
            r#"  <rect x="{LABEL_WIDTH}" y="{y}" width="{w}" height="{}" fill="{}"/>"#,
            BAR_HEIGHT - 4,
            color(table.polarity)
        );
        let _ = writeln!(svg, r#"  <text x="{}" y="{}">{count}</text>"#, LABEL_WIDTH + w + 4, y + 14);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_bar_per_entry() {
        let t = FrequencyTable {
            polarity: Polarity::Negative,
            entries: vec![("trash".into(), 4), ("parking <lot>".into(), 2)],
        };
        let svg = frequency_svg(&t);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains("parking &lt;lot&gt;"));
        assert!(svg.contains(r#"width="360""#));
    }
}
