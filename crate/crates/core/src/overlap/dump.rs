use std::io::Write;

use super::OverlapGraph;
use crate::error::Result;

/// Plain edge list: one `v` line per class, one `e` line per edge.
///
/// ```text
/// v <id> <left> <right> <z_1,...,z_d> <coincidence|overlap> <certain|uncertain> [root]
/// e <from> <to> <certain|uncertain>
/// ```
pub fn write_edge_list(g: &OverlapGraph, mut w: impl Write) -> Result<()> {
    writeln!(w, "# overlap graph: {} classes", g.vertices.len())?;
    let mut is_root = vec![false; g.vertices.len()];
    for &r in &g.roots {
        is_root[r] = true;
    }
    for (id, c) in g.vertices.iter().enumerate() {
        let z: Vec<String> = c.displacement.iter().map(|x| x.to_string()).collect();
        writeln!(
            w,
            "v {id} {} {} {} {} {}{}",
            c.left_color,
            c.right_color,
            z.join(","),
            if c.is_coincidence { "coincidence" } else { "overlap" },
            certainty(g.certain[id]),
            if is_root[id] { " root" } else { "" }
        )?;
    }
    for (from, out) in g.edges.iter().enumerate() {
        for e in out {
            writeln!(w, "e {from} {} {}", e.to, certainty(e.certain))?;
        }
    }
    Ok(())
}

fn certainty(c: bool) -> &'static str {
    if c {
        "certain"
    } else {
        "uncertain"
    }
}

pub fn edge_list_string(g: &OverlapGraph) -> String {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
