//! CSV serialisation of check reports.

use std::io::{self, Write};

use crate::verify::CheckReport;

pub const HEADER: &str = "case_id,check,n,R,K,C1,C2,B,A,M,lhs_max,rhs,margin,pass,grid,tau,runtime_ms";

/// 17 significant digits.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

pub fn csv_row(r: &CheckReport) -> String {
    [
        r.case_id.clone(),
        r.check.clone(),
        r.n.to_string(),
        number(r.radius),
        optional(r.k),
        optional(r.c1),
        optional(r.c2),
        optional(r.b_const),
        optional(r.a_const),
        optional(r.m),
        number(r.lhs_max),
        number(r.rhs),
        number(r.margin),
        r.pass.to_string(),
        r.grid.to_string(),
        optional(r.tau),
        r.runtime_ms.to_string(),
    ]
    .join(",")
}

pub fn to_csv(rows: &[CheckReport]) -> String {
    let mut s = String::with_capacity(256 * (rows.len() + 1));
    s.push_str(HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

pub fn write_csv(rows: &[CheckReport], mut out: impl Write) -> io::Result<()> {
    out.write_all(to_csv(rows).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_row_shape() {
        let r = CheckReport::new("thm2", 3, 10.0, 512).decide(1.0, 2.5, 1e-6).with_case("heat");
        let csv = to_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), HEADER.split(',').count());
        assert_eq!(row[0], "heat");
        assert_eq!(row[3], "1.0000000000000000e1");
        assert_eq!(row[4], "");
        assert_eq!(row[12], "1.5000000000000000e0");
        assert_eq!(row[13], "true");
        assert_eq!(row[16], "0");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [std::f64::consts::PI, 1e-300, -52.589, 0.1 + 0.2] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
    }
}
