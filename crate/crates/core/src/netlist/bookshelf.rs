//! Bookshelf subset reader/writer.
//!
//! Units differ from the classic format: `.nodes` widths are in sites and
//! heights in rows, `.pl` coordinates are (site, row) of the lower-left corner,
//! and `.nets` pin offsets are (sites, rows) from the cell center. `.scl` rows
//! use the usual physical `Coordinate`/`Height`/`Sitewidth` fields.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;

use super::{Cell, CellKind, Net, Netlist, Pin, Placement, Region, RegionKind, Row};
use crate::error::{Error, Result};
use crate::geom::Rect;

pub const BOOKSHELF_NOTE: &str = "widths in sites, heights in rows, .pl in (site,row)";

struct Lines<'a> {
    file: String,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(file: &Path, text: &'a str) -> Self {
        Lines { file: file.display().to_string(), iter: text.lines().enumerate() }
    }

    /// Next non-blank, non-comment, non-header line as (1-based line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.iter.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with("UCLA") {
                continue;
            }
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.file.clone(), line, msg)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn num<T: std::str::FromStr>(lines: &Lines, line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| lines.err(line, format!("expected a number, found `{tok}`")))
}

struct AuxFiles {
    nodes: PathBuf,
    nets: PathBuf,
    pl: PathBuf,
    scl: PathBuf,
    regions: Option<PathBuf>,
}

fn parse_aux(aux: &Path) -> Result<AuxFiles> {
    let text = read(aux)?;
    let dir = aux.parent().unwrap_or(Path::new("."));
    let mut lines = Lines::new(aux, &text);
    let (ln, toks) = lines.next_tokens().ok_or_else(|| lines.err(1, "empty .aux file"))?;
    let files: Vec<&str> = toks.iter().skip_while(|t| **t != ":").skip(1).copied().collect();
    let find = |ext: &str| files.iter().find(|f| f.ends_with(ext)).map(|f| dir.join(f));
    let need = |ext: &str| find(ext).ok_or_else(|| lines.err(ln, format!("no {ext} file listed")));
    let regions = find(".regions").or_else(|| {
        let p = aux.with_extension("regions");
        p.exists().then_some(p)
    });
    Ok(AuxFiles { nodes: need(".nodes")?, nets: need(".nets")?, pl: need(".pl")?, scl: need(".scl")?, regions })
}

/// Reads a design and its placement from a `.aux` file and the files it lists.
pub fn parse_bookshelf(aux: &Path) -> Result<(Netlist, Placement)> {
    let files = parse_aux(aux)?;
    for p in [&files.nodes, &files.nets, &files.pl, &files.scl] {
        if !p.exists() {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
        }
    }
    let mut cells = parse_nodes(&files.nodes)?;
    let index: HashMap<String, usize> = cells.iter().map(|c| (c.name.clone(), c.id)).collect();
    let nets = parse_nets(&files.nets, &index)?;
    let rows = parse_scl(&files.scl)?;
    let (placement, fixed) = parse_pl(&files.pl, &index, cells.len())?;
    for (c, f) in cells.iter_mut().zip(&fixed) {
        if *f {
            c.movable = false;
        }
    }
    let (fences, fence_of) = match &files.regions {
        Some(p) => parse_regions(p, &cells)?,
        None => (vec![], vec![None; cells.len()]),
    };
    if let Some(c) = placement.pos.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::IncompletePlacement(cells[c].name.clone()));
    }
    let nl = Netlist::new(cells, nets, rows, fences, fence_of)?;
    Ok((nl, placement))
}

fn parse_nodes(path: &Path) -> Result<Vec<Cell>> {
    let text = read(path)?;
    let mut lines = Lines::new(path, &text);
    let mut cells = Vec::new();
    let mut seen = HashMap::new();
    while let Some((ln, t)) = lines.next_tokens() {
        if t[0] == "NumNodes" || t[0] == "NumTerminals" {
            continue;
        }
        if t.len() < 3 {
            return Err(lines.err(ln, "expected `name width height [terminal|movable_macro]`"));
        }
        let width: u32 = num(&lines, ln, t[1])?;
        let height: u32 = num(&lines, ln, t[2])?;
        if width == 0 || height == 0 {
            return Err(lines.err(ln, "cell size must be positive"));
        }
        let (kind, movable) = match t.get(3).copied() {
            None => (CellKind::Standard, true),
            Some("terminal") | Some("terminal_NI") => (CellKind::Macro, false),
            Some("movable_macro") => (CellKind::Macro, true),
            Some(other) => return Err(lines.err(ln, format!("unknown node flag `{other}`"))),
        };
        let name = t[0].to_string();
        if seen.insert(name.clone(), ()).is_some() {
            return Err(Error::DuplicateCell(name));
        }
        cells.push(Cell { id: cells.len(), name, width, height, kind, movable });
    }
    Ok(cells)
}

fn parse_nets(path: &Path, index: &HashMap<String, usize>) -> Result<Vec<Net>> {
    let text = read(path)?;
    let mut lines = Lines::new(path, &text);
    let mut nets: Vec<Net> = Vec::new();
    let mut remaining = 0usize;
    while let Some((ln, t)) = lines.next_tokens() {
        if remaining == 0 {
            match t[0] {
                "NumNets" | "NumPins" => continue,
                "NetDegree" => {
                    if t.len() < 3 || t[1] != ":" {
                        return Err(lines.err(ln, "expected `NetDegree : k [name]`"));
                    }
                    remaining = num(&lines, ln, t[2])?;
                    if remaining == 0 {
                        return Err(lines.err(ln, "net with zero pins"));
                    }
                    let id = nets.len();
                    let name = t.get(3).map(|s| s.to_string()).unwrap_or_else(|| format!("net{id}"));
                    nets.push(Net { id, name, pins: Vec::with_capacity(remaining), driver: None });
                    continue;
                }
                other => return Err(lines.err(ln, format!("expected `NetDegree`, found `{other}`"))),
            }
        }
        let net = nets.last_mut().expect("inside a net");
        let cell = *index
            .get(t[0])
            .ok_or_else(|| Error::DanglingPin { net: net.name.clone(), cell: t[0].to_string() })?;
        let dir = t.get(1).copied().unwrap_or("I");
        if dir != "I" && dir != "O" && dir != "B" {
            return Err(lines.err(ln, format!("bad pin direction `{dir}`")));
        }
        let offs: Vec<&str> = t[2..].iter().copied().filter(|s| *s != ":").collect();
        let (dx, dy) = match offs.len() {
            0 => (0.0, 0.0),
            2 => (num(&lines, ln, offs[0])?, num(&lines, ln, offs[1])?),
            _ => return Err(lines.err(ln, "expected `name I|O [: xoff yoff]`")),
        };
        if dir == "O" && net.driver.is_none() {
            net.driver = Some(net.pins.len());
        }
        net.pins.push(Pin { cell, dx, dy });
        remaining -= 1;
    }
    if remaining != 0 {
        return Err(lines.err(text.lines().count(), "truncated net"));
    }
    Ok(nets)
}

fn parse_scl(path: &Path) -> Result<Vec<Row>> {
    let text = read(path)?;
    let mut lines = Lines::new(path, &text);
    let mut rows = Vec::new();
    let mut cur: Option<(f64, f64, f64, i64, i64)> = None; // coord, height, sitewidth, origin, sites
    while let Some((ln, t)) = lines.next_tokens() {
        match t[0] {
            "NumRows" => {}
            "CoreRow" => cur = Some((f64::NAN, f64::NAN, 1.0, 0, 0)),
            "End" => {
                let (coord, h, sw, origin, sites) =
                    cur.take().ok_or_else(|| lines.err(ln, "`End` outside CoreRow"))?;
                if !(h > 0.0) || !coord.is_finite() || sites <= 0 {
                    return Err(lines.err(ln, "incomplete CoreRow"));
                }
                let y = coord / h;
                if y.fract() != 0.0 {
                    return Err(lines.err(ln, "row coordinate is not a multiple of the row height"));
                }
                rows.push(Row { y: y as i64, x_start: origin, num_sites: sites, site_width: sw, row_height: h });
            }
            key => {
                let Some(c) = cur.as_mut() else {
                    return Err(lines.err(ln, format!("unexpected `{key}` outside CoreRow")));
                };
                let val = |i: usize| t.get(i).copied().ok_or_else(|| lines.err(ln, "missing value"));
                match key {
                    "Coordinate" => c.0 = num(&lines, ln, val(2)?)?,
                    "Height" => c.1 = num(&lines, ln, val(2)?)?,
                    "Sitewidth" => c.2 = num(&lines, ln, val(2)?)?,
                    "Sitespacing" | "Siteorient" | "Sitesymmetry" => {}
                    "SubrowOrigin" => {
                        c.3 = num(&lines, ln, val(2)?)?;
                        if t.get(3) == Some(&"NumSites") {
                            c.4 = num(&lines, ln, val(5)?)?;
                        }
                    }
                    "NumSites" => c.4 = num(&lines, ln, val(2)?)?,
                    other => return Err(lines.err(ln, format!("unknown row field `{other}`"))),
                }
            }
        }
    }
    if cur.is_some() {
        return Err(lines.err(text.lines().count(), "unterminated CoreRow"));
    }
    rows.sort_by_key(|r| r.y);
    Ok(rows)
}

fn parse_pl(path: &Path, index: &HashMap<String, usize>, n: usize) -> Result<(Placement, Vec<bool>)> {
    let text = read(path)?;
    let mut lines = Lines::new(path, &text);
    let mut pos = vec![(f64::NAN, f64::NAN); n];
    let mut fixed = vec![false; n];
    while let Some((ln, t)) = lines.next_tokens() {
        if t.len() < 3 {
            return Err(lines.err(ln, "expected `name x y : N [/FIXED]`"));
        }
        let c = *index.get(t[0]).ok_or_else(|| Error::UnknownCell(t[0].to_string()))?;
        let x: f64 = num(&lines, ln, t[1])?;
        let y: f64 = num(&lines, ln, t[2])?;
        if !x.is_finite() || !y.is_finite() {
            return Err(lines.err(ln, "non-finite coordinate"));
        }
        pos[c] = (x, y);
        fixed[c] = t.iter().any(|s| *s == "/FIXED" || *s == "/FIXED_NI");
    }
    Ok((Placement::new(pos), fixed))
}

fn glob_regex(glob: &str) -> Regex {
    let pat = regex::escape(glob).replace(r"\*", ".*").replace(r"\?", ".");
    Regex::new(&format!("^{pat}$")).expect("escaped glob is a valid regex")
}

fn parse_regions(path: &Path, cells: &[Cell]) -> Result<(Vec<Region>, Vec<Option<usize>>)> {
    let text = read(path)?;
    let mut lines = Lines::new(path, &text);
    let mut rects: Vec<Vec<Rect>> = Vec::new();
    let mut fence_of = vec![None; cells.len()];
    while let Some((ln, t)) = lines.next_tokens() {
        if t.len() < 4 || t[0] != "fence" || t[3] != ";" {
            return Err(lines.err(ln, "expected `fence <id> <glob> ; rect x0 y0 x1 y1 ...`"));
        }
        let id: usize = num(&lines, ln, t[1])?;
        if id > rects.len() {
            return Err(lines.err(ln, format!("fence ids must be dense; got {id}")));
        }
        if id == rects.len() {
            rects.push(Vec::new());
        }
        let re = glob_regex(t[2]);
        let mut rest = &t[4..];
        while !rest.is_empty() {
            if rest[0] != "rect" || rest.len() < 5 {
                return Err(lines.err(ln, "expected `rect x0 y0 x1 y1`"));
            }
            let v: Vec<f64> = rest[1..5].iter().map(|s| num(&lines, ln, s)).collect::<Result<_>>()?;
            let r = Rect::new(v[0], v[1], v[2], v[3]);
            if !(r.area() > 0.0) {
                return Err(lines.err(ln, "rect must have positive area"));
            }
            rects[id].push(r);
            rest = &rest[5..];
        }
        for c in cells.iter().filter(|c| re.is_match(&c.name)) {
            if let Some(prev) = fence_of[c.id] {
                if prev != id {
                    return Err(lines.err(ln, format!("cell `{}` matched by fences {prev} and {id}", c.name)));
                }
            }
            fence_of[c.id] = Some(id);
        }
    }
    let fences = rects
        .into_iter()
        .enumerate()
        .map(|(i, r)| Region::new(i, r, RegionKind::Fence))
        .collect::<Result<Vec<_>>>()?;
    Ok((fences, fence_of))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn pl_text(netlist: &Netlist, placement: &Placement) -> Result<String> {
    let mut s = String::from("UCLA pl 1.0\n\n");
    for c in &netlist.cells {
        let (x, y) = placement.pos.get(c.id).copied().unwrap_or((f64::NAN, f64::NAN));
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::IncompletePlacement(c.name.clone()));
        }
        let fixed = if c.movable { "" } else { " /FIXED" };
        writeln!(s, "{} {} {} : N{}", c.name, x, y, fixed).unwrap();
    }
    Ok(s)
}

/// Writes a `.pl` file for the placement. Every cell must have a finite position.
pub fn write_placement(netlist: &Netlist, placement: &Placement, path: &Path) -> Result<()> {
    let text = pl_text(netlist, placement)?;
    write_file(path, &text)
}

/// Writes `<stem>.aux` and its companion files into `dir`; returns the `.aux` path.
pub fn write_bookshelf(netlist: &Netlist, placement: &Placement, dir: &Path, stem: &str) -> Result<PathBuf> {
    let pl = pl_text(netlist, placement)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut nodes = String::from("UCLA nodes 1.0\n\n");
    let terminals = netlist.cells.iter().filter(|c| c.kind == CellKind::Macro).count();
    writeln!(nodes, "NumNodes : {}\nNumTerminals : {}", netlist.cells.len(), terminals).unwrap();
    for c in &netlist.cells {
        let flag = match (c.kind, c.movable) {
            (CellKind::Macro, false) => " terminal",
            (CellKind::Macro, true) => " movable_macro",
            _ => "",
        };
        writeln!(nodes, "{} {} {}{}", c.name, c.width, c.height, flag).unwrap();
    }

    let mut nets = String::from("UCLA nets 1.0\n\n");
    let num_pins: usize = netlist.nets.iter().map(|n| n.pins.len()).sum();
    writeln!(nets, "NumNets : {}\nNumPins : {}", netlist.nets.len(), num_pins).unwrap();
    for n in &netlist.nets {
        writeln!(nets, "NetDegree : {} {}", n.pins.len(), n.name).unwrap();
        for (i, p) in n.pins.iter().enumerate() {
            let dir = if n.driver == Some(i) { "O" } else { "I" };
            writeln!(nets, "  {} {} : {} {}", netlist.cells[p.cell].name, dir, p.dx, p.dy).unwrap();
        }
    }

    let mut scl = String::from("UCLA scl 1.0\n\n");
    writeln!(scl, "NumRows : {}", netlist.rows.len()).unwrap();
    for r in &netlist.rows {
        writeln!(
            scl,
            "CoreRow Horizontal\n  Coordinate : {}\n  Height : {}\n  Sitewidth : {}\n  Sitespacing : {}\n  Siteorient : N\n  Sitesymmetry : Y\n  SubrowOrigin : {} NumSites : {}\nEnd",
            r.y as f64 * r.row_height,
            r.row_height,
            r.site_width,
            r.site_width,
            r.x_start,
            r.num_sites
        )
        .unwrap();
    }

    let mut listed = format!("{stem}.nodes {stem}.nets {stem}.pl {stem}.scl");
    write_file(&dir.join(format!("{stem}.nodes")), &nodes)?;
    write_file(&dir.join(format!("{stem}.nets")), &nets)?;
    write_file(&dir.join(format!("{stem}.pl")), &pl)?;
    write_file(&dir.join(format!("{stem}.scl")), &scl)?;
    if !netlist.fences.is_empty() {
        let mut regions = String::from("# fence <id> <cell-glob> ; rect x0 y0 x1 y1 ...\n");
        for f in &netlist.fences {
            let members = netlist.fence_members(f.id);
            let rects: String =
                f.rects.iter().map(|r| format!(" rect {} {} {} {}", r.x0, r.y0, r.x1, r.y1)).collect();
            if members.is_empty() {
                // A glob that matches nothing still declares the fence geometry.
                writeln!(regions, "fence {} __no_members__ ;{}", f.id, rects).unwrap();
            }
            for (i, m) in members.iter().enumerate() {
                let r = if i == 0 { rects.as_str() } else { "" };
                writeln!(regions, "fence {} {} ;{}", f.id, netlist.cells[*m].name, r).unwrap();
            }
        }
        write_file(&dir.join(format!("{stem}.regions")), &regions)?;
        listed.push_str(&format!(" {stem}.regions"));
    }
    let aux = dir.join(format!("{stem}.aux"));
    write_file(&aux, &format!("RowBasedPlacement : {listed}\n"))?;
    Ok(aux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::fixtures::three_cell;

    fn write_fixture(dir: &Path, nets: &str) -> PathBuf {
        fs::write(dir.join("t.nodes"), "UCLA nodes 1.0\nNumNodes : 3\na 1 1\nb 2 1\nc 1 1\n").unwrap();
        fs::write(dir.join("t.nets"), nets).unwrap();
        fs::write(dir.join("t.pl"), "UCLA pl 1.0\na 0 0 : N\nb 3 0 : N\nc 6 1 : N\n").unwrap();
        fs::write(
            dir.join("t.scl"),
            "UCLA scl 1.0\nNumRows : 2\nCoreRow Horizontal\n Coordinate : 0\n Height : 8\n Sitewidth : 1\n SubrowOrigin : 0 NumSites : 10\nEnd\nCoreRow Horizontal\n Coordinate : 8\n Height : 8\n Sitewidth : 1\n SubrowOrigin : 0 NumSites : 10\nEnd\n",
        )
        .unwrap();
        let aux = dir.join("t.aux");
        fs::write(&aux, "RowBasedPlacement : t.nodes t.nets t.pl t.scl\n").unwrap();
        aux
    }

    #[test]
    fn parses_three_cell_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let aux = write_fixture(
            dir.path(),
            "UCLA nets 1.0\n# two nets\nNetDegree : 2 n0\n a O\n b I\nNetDegree : 2 n1\n b O : 0.5 0\n c I : 0 0\n",
        );
        let (nl, pl) = parse_bookshelf(&aux).unwrap();
        assert_eq!(nl.cells.len(), 3);
        assert_eq!(nl.nets.len(), 2);
        assert_eq!(nl.nets[1].driver, Some(0));
        assert_eq!(nl.nets[1].pins[0].dx, 0.5);
        assert_eq!(nl.row_height(), 8.0);
        assert_eq!(pl.get(2), (6.0, 1.0));
    }

    #[test]
    fn dangling_pin_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let aux = write_fixture(dir.path(), "NetDegree : 2 n0\n a O\n ghost I\n");
        let err = parse_bookshelf(&aux).unwrap_err();
        assert!(matches!(err, Error::DanglingPin { ref cell, .. } if cell == "ghost"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let aux = write_fixture(dir.path(), "NetDegree : 2 n0\n a O\n b I\nNetDegree : x\n");
        match parse_bookshelf(&aux).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_cell_name() {
        let dir = tempfile::tempdir().unwrap();
        let aux = write_fixture(dir.path(), "NetDegree : 1 n0\n a O\n");
        fs::write(dir.path().join("t.nodes"), "a 1 1\na 1 1\nc 1 1\n").unwrap();
        assert!(matches!(parse_bookshelf(&aux).unwrap_err(), Error::DuplicateCell(_)));
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let aux = write_fixture(dir.path(), "NetDegree : 1 n0\n a O\n");
        fs::remove_file(dir.path().join("t.scl")).unwrap();
        assert!(matches!(parse_bookshelf(&aux).unwrap_err(), Error::Io { .. }));
    }

    #[test]
    fn regions_sidecar_with_glob() {
        let dir = tempfile::tempdir().unwrap();
        let aux = write_fixture(dir.path(), "NetDegree : 2 n0\n a O\n b I\n");
        fs::write(dir.path().join("t.regions"), "fence 0 [bc] ; rect 0 0 5 2\nfence 0 c ;\n").unwrap();
        // `[bc]` is literal in our glob dialect, so only `c` joins.
        let (nl, _) = parse_bookshelf(&aux).unwrap();
        assert_eq!(nl.fences.len(), 1);
        assert_eq!(nl.fence_members(0), vec![2]);
        fs::write(dir.path().join("t.regions"), "fence 0 * ; rect 0 0 5 2 rect 5 0 10 1\n").unwrap();
        let (nl, _) = parse_bookshelf(&aux).unwrap();
        assert_eq!(nl.fence_members(0).len(), 3);
        assert_eq!(nl.fences[0].rects.len(), 2);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let (nl, pl) = three_cell();
        let dir = tempfile::tempdir().unwrap();
        let aux = write_bookshelf(&nl, &pl, dir.path(), "rt").unwrap();
        let (nl2, pl2) = parse_bookshelf(&aux).unwrap();
        assert_eq!(nl, nl2);
        assert_eq!(pl, pl2);
    }

    #[test]
    fn incomplete_placement_is_rejected() {
        let (nl, mut pl) = three_cell();
        pl.pos[1] = (f64::NAN, f64::NAN);
        let dir = tempfile::tempdir().unwrap();
        let err = write_placement(&nl, &pl, &dir.path().join("x.pl")).unwrap_err();
        assert!(matches!(err, Error::IncompletePlacement(ref n) if n == "b"));
        pl.pos.pop();
        assert!(write_placement(&nl, &pl, &dir.path().join("x.pl")).is_err());
    }
}
