//! count, sum and max heads kept up to date by the command interpreter.

use lftj_ivm::cli::Workspace;

const SALES: &str = "1 1 1000.00\n1 2 1500.00\n1 3 7300.00\n2 6 2900.00\n2 7 3500.00\n2 13 9000.00\n3 14 325.00\n";
const UNITS: &str = "1 1 3\n1 2 5\n2 6 1\n2 7 4\n";

fn main() -> lftj_ivm::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| lftj_ivm::Error::Io(e.to_string()))?;
    std::fs::write(dir.path().join("sales.txt"), SALES).unwrap();
    std::fs::write(dir.path().join("units.txt"), UNITS).unwrap();
    std::fs::write(dir.path().join("drop.delta"), "-2 13 9000.00\n+3 15 4000.00\n").unwrap();
    std::fs::write(dir.path().join("units.delta"), "+2 8 10\n").unwrap();

    let mut ws = Workspace::with_base(dir.path());
    let script = "\
load sales[2] sales.txt
load units[2] units.txt
rule maxsales[r]=m <- agg<< m=max(v) >> sales[r,s]=v.
rule stores[r]=n <- agg<< n=count() >> sales[r,s]=v.
rule volume[r]=n <- agg<< n=sum(u) >> units[r,s]=u.
eval 0
eval 1
eval 2
dump maxsales
dump stores
dump volume
delta sales drop.delta
delta units units.delta
maintain 0
maintain 1
maintain 2
dump maxsales
dump stores
dump volume
";
    for line in script.lines() {
        let out = ws.execute(line)?;
        if line.starts_with("dump") {
            print!("{line}:\n{out}");
        }
    }
    for w in ws.take_warnings() {
        eprintln!("warning: {w}");
    }
    Ok(())
}
