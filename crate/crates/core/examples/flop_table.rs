//! Prints the analytical flop comparison at the reference setting and at the
//! desk-scale setting.

use gfna::complexity::{complexity_table, flops_daud, table1_report};

fn main() -> gfna::Result<()> {
    let table = table1_report();
    print!("{}", table.render_text());
    println!();
    print!("{}", table.to_csv());
    println!();

    print!("{}", complexity_table(20, 12, 128, 3, &[1, 2, 3, 4])?.render_text());
    println!();

    let report = flops_daud(80, 40, 500, 6, 8, true)?;
    println!("D-AUD at k=8, broken down:");
    for (name, value) in &report.components {
        println!("  {name:<24} {value:>14.1}");
    }
    println!("  {:<24} {:>14.1}", "total", report.total);
    Ok(())
}
