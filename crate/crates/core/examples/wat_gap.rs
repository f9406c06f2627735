//! The identity construction: each attack fools exactly one example.

use attack_bundle::bundler::wat_gap_construction;
use attack_bundle::report::{tables_from_matrix, wat_underestimation_report, write_gap_csv};

fn main() -> attack_bundle::Result<()> {
    let tables = tables_from_matrix(&wat_gap_construction(4)?, None);
    println!("{}", tables.wat);
    println!("{}", tables.bundled);

    let rows = wat_underestimation_report(&[1, 2, 10, 100, 1000])?;
    let mut csv = Vec::new();
    write_gap_csv(&rows, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
