//! Edge lists, Matrix Market and SocioPatterns contact lists.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{AdjacencyMatrix, ProbabilityMatrix};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn is_comment(line: &str) -> bool {
    line.is_empty() || line.starts_with('#') || line.starts_with('%')
}

/// Read a whitespace-separated `u v` edge list.
///
/// When every endpoint parses as an unsigned integer the file is taken as
/// 0-based indices and `n = max index + 1`. Otherwise endpoints are treated
/// as labels, numbered in order of first appearance and kept as node labels.
pub fn read_edge_list(path: &Path) -> Result<AdjacencyMatrix> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if is_comment(line) {
            continue;
        }
        let mut it = line.split_whitespace();
        match (it.next(), it.next()) {
            (Some(u), Some(v)) => pairs.push((u.to_string(), v.to_string())),
            _ => return Err(parse_err(path, lineno + 1, "expected two node identifiers")),
        }
    }
    let numeric: Option<Vec<(usize, usize)>> = pairs
        .iter()
        .map(|(u, v)| Some((u.parse().ok()?, v.parse().ok()?)))
        .collect();
    match numeric {
        Some(idx) => {
            let n = idx.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
            AdjacencyMatrix::from_edges(n, idx)
        }
        None => {
            let mut ids: HashMap<String, usize> = HashMap::new();
            let mut labels = Vec::new();
            let mut edges = Vec::with_capacity(pairs.len());
            for (u, v) in pairs {
                let mut index = |s: String| {
                    *ids.entry(s.clone()).or_insert_with(|| {
                        labels.push(s);
                        labels.len() - 1
                    })
                };
                let a = index(u);
                let b = index(v);
                edges.push((a, b));
            }
            AdjacencyMatrix::from_edges(labels.len(), edges)?.with_labels(labels)
        }
    }
}

/// Write `i<TAB>j` per undirected edge, `i < j`, 0-based.
pub fn write_edge_list<W: Write>(a: &AdjacencyMatrix, mut w: W) -> Result<()> {
    for (i, j) in a.edges() {
        writeln!(w, "{i}\t{j}")?;
    }
    Ok(())
}

/// Read a Matrix Market coordinate file as an adjacency matrix. Any nonzero
/// off-diagonal entry becomes an edge; general matrices are symmetrized.
pub fn read_matrix_market(path: &Path) -> Result<AdjacencyMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(parse_err(path, 1, "expected a MatrixMarket coordinate header"));
    }
    let pattern = h[3] == "pattern";
    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in lines {
        let line = raw.trim();
        if is_comment(line) {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: &str| parse_err(path, lineno + 1, m);
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(bad("expected `rows cols nnz`"));
                }
                let r: usize = toks[0].parse().map_err(|_| bad("bad row count"))?;
                let c: usize = toks[1].parse().map_err(|_| bad("bad column count"))?;
                if r != c {
                    return Err(bad("adjacency matrix must be square"));
                }
                size = Some((r, c));
            }
            Some((n, _)) => {
                if toks.len() < 2 {
                    return Err(bad("expected `row col [value]`"));
                }
                let i: usize = toks[0].parse().map_err(|_| bad("bad row index"))?;
                let j: usize = toks[1].parse().map_err(|_| bad("bad column index"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(bad("index out of range"));
                }
                let value = if pattern {
                    1.0
                } else {
                    toks.get(2)
                        .ok_or_else(|| bad("missing value"))?
                        .parse::<f64>()
                        .map_err(|_| bad("bad value"))?
                };
                if value != 0.0 {
                    edges.push((i - 1, j - 1));
                }
            }
        }
    }
    let (n, _) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    AdjacencyMatrix::from_edges(n, edges)
}

/// Write the lower triangle as a symmetric pattern matrix (1-based).
pub fn write_matrix_market<W: Write>(a: &AdjacencyMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate pattern symmetric")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.edge_count())?;
    for j in 0..a.n() {
        for &i in a.neighbors(j).iter().filter(|&&i| i > j) {
            writeln!(w, "{} {}", i + 1, j + 1)?;
        }
    }
    Ok(())
}

/// Dense MatrixMarket `array real symmetric` (lower triangle, column-major).
pub fn write_probability_matrix_market<W: Write>(p: &ProbabilityMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real symmetric")?;
    writeln!(w, "{} {}", p.n(), p.n())?;
    for j in 0..p.n() {
        for i in j..p.n() {
            writeln!(w, "{}", p.get(i, j))?;
        }
    }
    Ok(())
}

/// Dense comma-separated matrix, one row per line, no header.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut w: W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a dense comma-separated probability matrix.
pub fn read_probability_csv(path: &Path) -> Result<ProbabilityMatrix> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, lineno + 1, e.to_string()))?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(parse_err(path, 1, "probability matrix must be square"));
    }
    ProbabilityMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Load an adjacency matrix, choosing the format from the file contents.
pub fn read_adjacency(path: &Path) -> Result<AdjacencyMatrix> {
    let head = fs::read_to_string(path)?;
    if head.trim_start().to_lowercase().starts_with("%%matrixmarket") {
        read_matrix_market(path)
    } else {
        read_edge_list(path)
    }
}

/// One face-to-face contact record.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub time: i64,
    pub i: String,
    pub j: String,
    pub class_i: Option<String>,
    pub class_j: Option<String>,
}

/// Parse a SocioPatterns contact list: `t i j [class_i class_j]` per line.
pub fn read_contacts(path: &Path) -> Result<Vec<Contact>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if is_comment(line) {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 && toks.len() != 5 {
            return Err(parse_err(
                path,
                lineno + 1,
                format!("expected `t i j [class_i class_j]`, found {} fields", toks.len()),
            ));
        }
        let time = toks[0]
            .parse::<i64>()
            .map_err(|_| parse_err(path, lineno + 1, format!("bad timestamp {:?}", toks[0])))?;
        out.push(Contact {
            time,
            i: toks[1].to_string(),
            j: toks[2].to_string(),
            class_i: toks.get(3).map(|s| s.to_string()),
            class_j: toks.get(4).map(|s| s.to_string()),
        });
    }
    Ok(out)
}

/// Parse a roster/metadata file: `id [class [...]]` per line.
pub fn read_roster(path: &Path) -> Result<Vec<(String, Option<String>)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if is_comment(line) {
            continue;
        }
        let mut toks = line.split_whitespace();
        if let Some(id) = toks.next() {
            out.push((id.to_string(), toks.next().map(str::to_string)));
        }
    }
    Ok(out)
}

/// A contact window collapsed to a single network.
#[derive(Debug, Clone)]
pub struct ContactWindow {
    /// Node labels are the participant identifiers.
    pub adjacency: AdjacencyMatrix,
    /// Class of each node when known.
    pub classes: Vec<Option<String>>,
}

fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Collapse contacts with `start <= t < end` into one network; an edge is
/// present iff at least one contact falls in the window.
///
/// The node set is the roster when given, else every participant seen
/// anywhere in `contacts`; nodes are ordered by identifier.
pub fn contacts_to_window(
    contacts: &[Contact],
    start: i64,
    end: i64,
    roster: Option<&[(String, Option<String>)]>,
) -> Result<ContactWindow> {
    if end <= start {
        return Err(Error::invalid("window end must be after window start"));
    }
    let mut classes: BTreeMap<String, Option<String>> = BTreeMap::new();
    if let Some(r) = roster {
        for (id, class) in r {
            classes.insert(id.clone(), class.clone());
        }
    }
    for c in contacts {
        for (id, class) in [(&c.i, &c.class_i), (&c.j, &c.class_j)] {
            if roster.is_some() && !classes.contains_key(id) {
                return Err(Error::invalid(format!("participant {id} missing from roster")));
            }
            let slot = classes.entry(id.clone()).or_insert(None);
            if slot.is_none() {
                slot.clone_from(class);
            }
        }
    }
    let mut ids: Vec<String> = classes.keys().cloned().collect();
    ids.sort_by(|a, b| id_order(a, b));
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let edges = contacts
        .iter()
        .filter(|c| c.time >= start && c.time < end)
        .map(|c| (index[c.i.as_str()], index[c.j.as_str()]));
    let adjacency = AdjacencyMatrix::from_edges(ids.len(), edges)?;
    let node_classes = ids.iter().map(|id| classes[id].clone()).collect();
    Ok(ContactWindow {
        adjacency: adjacency.with_labels(ids)?,
        classes: node_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn numeric_edge_list() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "g.tsv", "# comment\n0\t1\n1 0\n2\t3\n");
        let a = read_edge_list(&p).unwrap();
        assert_eq!(a.n(), 4);
        assert_eq!(a.edge_count(), 2);
        assert!(a.node_labels().is_none());
    }

    #[test]
    fn labeled_edge_list() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "g.tsv", "alice bob\nbob carol\ncarol alice\n");
        let a = read_edge_list(&p).unwrap();
        assert_eq!(a.n(), 3);
        assert_eq!(a.edge_count(), 3);
        assert_eq!(a.node_labels().unwrap(), ["alice", "bob", "carol"]);
    }

    #[test]
    fn malformed_edge_list_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "g.tsv", "0 1\n2\n");
        match read_edge_list(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_market_round_trip() {
        let a = AdjacencyMatrix::from_edges(5, [(0, 1), (1, 4), (2, 3), (0, 4)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mtx");
        fs::write(&p, &buf).unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), a);
        assert_eq!(read_adjacency(&p).unwrap(), a);
    }

    #[test]
    fn matrix_market_general_real() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix coordinate real general\n% c\n3 3 3\n1 2 1.0\n2 1 1.0\n3 3 1.0\n",
        );
        let a = read_matrix_market(&p).unwrap();
        assert_eq!(a.edge_count(), 1);
        assert!(!a.has_edge(2, 2));
    }

    #[test]
    fn probability_csv_round_trip() {
        let p = ProbabilityMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.25, 0.25, 0.0])).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(p.as_matrix(), &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, &buf).unwrap();
        assert_eq!(read_probability_csv(&path).unwrap(), p);
    }

    #[test]
    fn contact_window() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "contacts.dat",
            "100\t1\t2\t1A\t1A\n120\t1\t2\t1A\t1A\n130\t2\t3\t1A\t2B\n500\t3\t10\t2B\tTeachers\n",
        );
        let contacts = read_contacts(&p).unwrap();
        let w = contacts_to_window(&contacts, 100, 200, None).unwrap();
        assert_eq!(w.adjacency.n(), 4);
        assert_eq!(w.adjacency.edge_count(), 2);
        assert_eq!(w.adjacency.node_labels().unwrap(), ["1", "2", "3", "10"]);
        assert_eq!(w.classes[3].as_deref(), Some("Teachers"));

        let empty = contacts_to_window(&contacts, 1000, 2000, None).unwrap();
        assert_eq!(empty.adjacency.n(), 4);
        assert_eq!(empty.adjacency.edge_count(), 0);
    }

    #[test]
    fn contact_parse_error_has_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.dat", "1 2 3\nx 1 2\n");
        match read_contacts(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn roster_extends_node_set() {
        let contacts = vec![Contact {
            time: 5,
            i: "a".into(),
            j: "b".into(),
            class_i: None,
            class_j: None,
        }];
        let roster = vec![
            ("a".to_string(), Some("x".to_string())),
            ("b".to_string(), None),
            ("c".to_string(), Some("y".to_string())),
        ];
        let w = contacts_to_window(&contacts, 0, 10, Some(&roster)).unwrap();
        assert_eq!(w.adjacency.n(), 3);
        assert_eq!(w.classes, vec![Some("x".into()), None, Some("y".into())]);
    }
}
