//! Chart data tables (CSV) and standalone SVG renderings.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::aggregate::CorpusReport;
use crate::detectors::PatternKind;
use crate::risk::RiskTier;

const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

/// Writes every chart table and graphic into `out_dir`, returning the paths
/// in write order.
pub fn emit_chart_data(report: &CorpusReport, out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> io::Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put("pattern_frequency.csv", pattern_frequency_csv(report)?)?;
    put("pattern_frequency.svg", pattern_frequency_svg(report))?;
    put("pattern_subkinds.csv", pattern_subkinds_csv(report)?)?;
    put("tier_distribution.csv", tier_distribution_csv(report)?)?;
    put("tier_distribution.svg", tier_distribution_svg(report))?;
    put("cooccurrence_heatmap.csv", cooccurrence_csv(report)?)?;
    put("cooccurrence_heatmap.svg", cooccurrence_svg(report))?;
    put("top10_contracts.csv", top10_csv(report)?)?;
    put("top10_contracts.svg", top10_svg(report))?;
    put("score_histogram.csv", score_histogram_csv(report)?)?;
    Ok(written)
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn percent(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn pattern_frequency_csv(r: &CorpusReport) -> io::Result<String> {
    csv_table(
        &["pattern", "weight", "contracts", "percent_of_analyzed"],
        PatternKind::ALL.iter().map(|&p| {
            let n = r.pattern_count(p);
            vec![p.to_string(), p.weight().to_string(), n.to_string(), format!("{:.2}", percent(n, r.analyzed_contracts))]
        }),
    )
}

pub fn pattern_subkinds_csv(r: &CorpusReport) -> io::Result<String> {
    csv_table(
        &["pattern", "sub_kind", "contracts"],
        r.sub_kind_counts
            .iter()
            .flat_map(|(p, subs)| subs.iter().map(move |(s, n)| vec![p.to_string(), s.to_string(), n.to_string()])),
    )
}

pub fn tier_distribution_csv(r: &CorpusReport) -> io::Result<String> {
    csv_table(
        &["tier", "contracts", "percent"],
        RiskTier::ALL.iter().map(|&t| {
            vec![t.to_string(), r.tier_count(t).to_string(), format!("{:.2}", r.tier_percentages.get(&t).copied().unwrap_or(0.0))]
        }),
    )
}

pub fn cooccurrence_csv(r: &CorpusReport) -> io::Result<String> {
    let mut header = vec!["pattern"];
    header.extend(PatternKind::ALL.iter().map(|p| p.as_str()));
    csv_table(
        &header,
        PatternKind::ALL.iter().map(|&a| {
            let mut row = vec![a.to_string()];
            row.extend(PatternKind::ALL.iter().map(|&b| r.cooccurrence(a, b).to_string()));
            row
        }),
    )
}

pub fn top10_csv(r: &CorpusReport) -> io::Result<String> {
    csv_table(
        &["rank", "contract_id", "score", "tier", "patterns"],
        r.top_n.iter().take(10).enumerate().map(|(i, e)| {
            let patterns: Vec<&str> = e.distinct_patterns.iter().map(|p| p.as_str()).collect();
            vec![(i + 1).to_string(), e.contract_id.clone(), e.score.to_string(), e.tier.to_string(), patterns.join(";")]
        }),
    )
}

pub fn score_histogram_csv(r: &CorpusReport) -> io::Result<String> {
    csv_table(&["score", "contracts"], r.score_histogram.iter().map(|(s, n)| vec![s.to_string(), n.to_string()]))
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(width: u32, height: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">{}</text>\n",
        width / 2,
        escape(title)
    )
}

pub fn pattern_frequency_svg(r: &CorpusReport) -> String {
    let (left, top, bar_h, gap, plot_w) = (190.0, 40.0, 24.0, 10.0, 360.0);
    let max = PatternKind::ALL.iter().map(|&p| r.pattern_count(p)).max().unwrap_or(0).max(1) as f64;
    let height = (top + PatternKind::ALL.len() as f64 * (bar_h + gap) + 20.0) as u32;
    let mut s = svg_open(640, height, "Pattern frequency (contracts)");
    for (i, &p) in PatternKind::ALL.iter().enumerate() {
        let n = r.pattern_count(p);
        let y = top + i as f64 * (bar_h + gap);
        let w = plot_w * n as f64 / max;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" {FONT}>{}</text>\n\
             <rect x=\"{left}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{bar_h}\" fill=\"#4c72b0\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" {FONT}>{n}</text>",
            left - 8.0,
            y + bar_h * 0.7,
            p,
            left + w + 6.0,
            y + bar_h * 0.7,
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tier_color(t: RiskTier) -> &'static str {
    match t {
        RiskTier::High => "#c44e52",
        RiskTier::Medium => "#dd8452",
        RiskTier::Low => "#ccb974",
        RiskTier::None => "#8c8c8c",
    }
}

pub fn tier_distribution_svg(r: &CorpusReport) -> String {
    let (cx, cy, radius) = (160.0_f64, 180.0_f64, 120.0_f64);
    let mut s = svg_open(420, 340, "Risk tier distribution");
    let total = r.analyzed_contracts;
    if total == 0 {
        let _ = writeln!(s, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{radius}\" fill=\"#eeeeee\"/>");
    }
    let mut angle = -std::f64::consts::FRAC_PI_2;
    for &t in &RiskTier::ALL {
        let n = r.tier_count(t);
        if n == 0 {
            continue;
        }
        if n == total {
            let _ = writeln!(s, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{radius}\" fill=\"{}\"/>", tier_color(t));
            continue;
        }
        let sweep = std::f64::consts::TAU * n as f64 / total as f64;
        let (x0, y0) = (cx + radius * angle.cos(), cy + radius * angle.sin());
        angle += sweep;
        let (x1, y1) = (cx + radius * angle.cos(), cy + radius * angle.sin());
        let large = u8::from(sweep > std::f64::consts::PI);
        let _ = writeln!(
            s,
            "<path d=\"M{cx:.2},{cy:.2} L{x0:.2},{y0:.2} A{radius},{radius} 0 {large} 1 {x1:.2},{y1:.2} Z\" fill=\"{}\" stroke=\"white\"/>",
            tier_color(t)
        );
    }
    for (i, &t) in RiskTier::ALL.iter().enumerate() {
        let y = 120 + i * 26;
        let _ = writeln!(
            s,
            "<rect x=\"300\" y=\"{y}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n<text x=\"320\" y=\"{}\" {FONT}>{} {:.1}%</text>",
            tier_color(t),
            y + 12,
            t,
            r.tier_percentages.get(&t).copied().unwrap_or(0.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn cooccurrence_svg(r: &CorpusReport) -> String {
    let (left, top, cell) = (190.0, 60.0, 56.0);
    let n = PatternKind::ALL.len() as f64;
    let max = r.cooccurrence_matrix.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = svg_open((left + n * cell + 20.0) as u32, (top + n * cell + 150.0) as u32, "Pattern co-occurrence");
    for (i, &a) in PatternKind::ALL.iter().enumerate() {
        let y = top + i as f64 * cell;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" {FONT}>{a}</text>", left - 8.0, y + cell / 2.0 + 4.0);
        for (j, &b) in PatternKind::ALL.iter().enumerate() {
            let x = left + j as f64 * cell;
            let v = r.cooccurrence(a, b);
            let shade = 255 - (200.0 * v as f64 / max).round() as u8;
            let ink = if shade < 140 { "white" } else { "black" };
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({shade},{shade},255)\" stroke=\"white\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{ink}\" {FONT}>{v}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    let label_y = top + n * cell + 8.0;
    for (j, &b) in PatternKind::ALL.iter().enumerate() {
        let x = left + j as f64 * cell + cell / 2.0;
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{label_y:.1}\" transform=\"rotate(45 {x:.1} {label_y:.1})\" {FONT}>{b}</text>");
    }
    s.push_str("</svg>\n");
    s
}

pub fn top10_svg(r: &CorpusReport) -> String {
    let rows: Vec<_> = r.top_n.iter().take(10).collect();
    let row_h = 22;
    let height = 70 + (rows.len() as u32 + 1) * row_h;
    let mut s = svg_open(900, height, "Top contracts by risk score");
    let cols = [(20, "#"), (50, "contract"), (560, "score"), (610, "tier"), (680, "patterns")];
    for (x, label) in cols {
        let _ = writeln!(s, "<text x=\"{x}\" y=\"56\" font-weight=\"bold\" {FONT}>{label}</text>");
    }
    for (i, e) in rows.iter().enumerate() {
        let y = 56 + (i as u32 + 1) * row_h;
        let patterns: Vec<&str> = e.distinct_patterns.iter().map(|p| p.as_str()).collect();
        let mut id = e.contract_id.clone();
        if id.chars().count() > 70 {
            id = format!("...{}", id.chars().rev().take(67).collect::<Vec<_>>().into_iter().rev().collect::<String>());
        }
        let _ = writeln!(
            s,
            "<text x=\"20\" y=\"{y}\" {FONT}>{}</text><text x=\"50\" y=\"{y}\" {FONT}>{}</text>\
             <text x=\"560\" y=\"{y}\" {FONT}>{}</text><text x=\"610\" y=\"{y}\" fill=\"{}\" {FONT}>{}</text>\
             <text x=\"680\" y=\"{y}\" font-size=\"10\" font-family=\"sans-serif\">{}</text>",
            i + 1,
            escape(&id),
            e.score,
            tier_color(e.tier),
            e.tier,
            escape(&patterns.join(", "))
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{aggregate, AggregateOptions};
    use crate::detectors::Finding;
    use crate::frontend::{LineSpan, Span};
    use crate::risk::{profile, ScoringMode};

    fn report(specs: &[(&str, &[PatternKind])]) -> CorpusReport {
        let profiles: Vec<_> = specs
            .iter()
            .map(|(id, ps)| {
                let findings = ps
                    .iter()
                    .map(|&pattern| Finding {
                        pattern,
                        sub_kind: None,
                        contract_name: id.to_string(),
                        function_name: "f".into(),
                        span: LineSpan { start: 1, end: 1 },
                        description: String::new(),
                        evidence: String::new(),
                        location: Span::default(),
                    })
                    .collect();
                profile("c.sol", id, findings, None, ScoringMode::Presence)
            })
            .collect();
        aggregate(&profiles, [], AggregateOptions::default()).unwrap()
    }

    fn data_rows(csv: &str) -> Vec<Vec<String>> {
        csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    #[test]
    fn tier_rows_sum_to_hundred() {
        let r = report(&[("A", &[PatternKind::SelfDestruct]), ("B", &[]), ("C", &[PatternKind::TxOriginAuth])]);
        let sum: f64 = data_rows(&tier_distribution_csv(&r).unwrap()).iter().map(|row| row[2].parse::<f64>().unwrap()).sum();
        assert!((sum - 100.0).abs() <= 0.1, "{sum}");
    }

    #[test]
    fn all_patterns_six_nonzero_rows() {
        let r = report(&[("A", &PatternKind::ALL)]);
        let rows = data_rows(&pattern_frequency_csv(&r).unwrap());
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|row| row[2] == "1"));
    }

    #[test]
    fn top10_truncates_to_corpus() {
        let r = report(&[("A", &[]), ("B", &[PatternKind::DelegateCall]), ("C", &[])]);
        let rows = data_rows(&top10_csv(&r).unwrap());
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0][1], "c.sol::B");
    }

    #[test]
    fn writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(&[("A<&>", &[PatternKind::SelfDestruct])]);
        let files = emit_chart_data(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 10);
        let svg = fs::read_to_string(dir.path().join("top10_contracts.svg")).unwrap();
        assert!(svg.contains("A&lt;&amp;&gt;"));
        for f in files {
            assert!(!fs::read_to_string(f).unwrap().contains('\r'));
        }
    }
}
