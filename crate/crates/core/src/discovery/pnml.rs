//! PNML import/export and DOT rendering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;

use super::petri::{PetriNet, Place, Transition};
use crate::error::{Error, Result};

pub fn to_pnml(net: &PetriNet, name: &str) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    let _ = writeln!(
        s,
        "  <net id=\"net1\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">\n    <name><text>{}</text></name>\n    <page id=\"n0\">",
        escape(name)
    );
    for (i, p) in net.places.iter().enumerate() {
        let _ = write!(s, "      <place id=\"{}\"><name><text>{}</text></name>", escape(&p.id), escape(&p.id));
        if net.initial[i] > 0 {
            let _ = write!(s, "<initialMarking><text>{}</text></initialMarking>", net.initial[i]);
        }
        s.push_str("</place>\n");
    }
    for t in &net.transitions {
        let _ = write!(s, "      <transition id=\"{}\">", escape(&t.id));
        match &t.label {
            Some(l) => {
                let _ = write!(s, "<name><text>{}</text></name>", escape(l));
            }
            None => {
                let _ = write!(
                    s,
                    "<name><text>{}</text></name><toolspecific tool=\"ProM\" version=\"6.4\" activity=\"$invisible$\" localNodeID=\"{}\"/>",
                    escape(&t.id),
                    escape(&t.id)
                );
            }
        }
        s.push_str("</transition>\n");
    }
    let mut arc = 0;
    for t in &net.transitions {
        for &p in &t.inputs {
            let _ = writeln!(
                s,
                "      <arc id=\"a{arc}\" source=\"{}\" target=\"{}\"/>",
                escape(&net.places[p].id),
                escape(&t.id)
            );
            arc += 1;
        }
        for &p in &t.outputs {
            let _ = writeln!(
                s,
                "      <arc id=\"a{arc}\" source=\"{}\" target=\"{}\"/>",
                escape(&t.id),
                escape(&net.places[p].id)
            );
            arc += 1;
        }
    }
    s.push_str("    </page>\n    <finalmarkings>\n      <marking>\n");
    for (i, p) in net.places.iter().enumerate() {
        if net.final_marking[i] > 0 {
            let _ = writeln!(
                s,
                "        <place idref=\"{}\"><text>{}</text></place>",
                escape(&p.id),
                net.final_marking[i]
            );
        }
    }
    s.push_str("      </marking>\n    </finalmarkings>\n  </net>\n</pnml>\n");
    s
}

pub fn write_pnml(net: &PetriNet, name: &str, path: &Path) -> Result<()> {
    std::fs::write(path, to_pnml(net, name)).map_err(|e| Error::io(path, e))
}

pub fn read_pnml(path: &Path) -> Result<PetriNet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pnml(&text)
}

#[derive(Default)]
struct RawTransition {
    id: String,
    name: Option<String>,
    invisible: bool,
}

/// Reads places, transitions, arcs, the initial marking and the first final
/// marking. Transitions flagged `$invisible$` or without a name are silent.
pub fn parse_pnml(text: &str) -> Result<PetriNet> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<String> = Vec::new();
    let mut places: Vec<(String, u8)> = Vec::new();
    let mut transitions: Vec<RawTransition> = Vec::new();
    let mut arcs: Vec<(String, String)> = Vec::new();
    let mut finals: Vec<(String, u8)> = Vec::new();
    let mut final_ref: Option<String> = None;
    let mut in_final = false;
    let mut final_done = false;

    let attr = |e: &quick_xml::events::BytesStart, key: &[u8]| -> Result<Option<String>> {
        for a in e.attributes() {
            let a = a.map_err(|err| Error::Parse(format!("pnml attribute: {err}")))?;
            if a.key.as_ref() == key {
                let v = a
                    .unescape_value()
                    .map_err(|err| Error::Parse(format!("pnml attribute: {err}")))?;
                return Ok(Some(v.into_owned()));
            }
        }
        Ok(None)
    };

    loop {
        let ev = reader
            .read_event()
            .map_err(|e| Error::Parse(format!("pnml at byte {}: {e}", reader.buffer_position())))?;
        match ev {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                let empty = matches!(ev, Event::Empty(_));
                let parent = stack.last().map(String::as_str);
                match tag.as_str() {
                    "finalmarkings" => in_final = true,
                    "place" if in_final => final_ref = attr(e, b"idref")?,
                    "place" => places.push((attr(e, b"id")?.unwrap_or_default(), 0)),
                    "transition" => transitions.push(RawTransition {
                        id: attr(e, b"id")?.unwrap_or_default(),
                        ..Default::default()
                    }),
                    "arc" => arcs.push((
                        attr(e, b"source")?.unwrap_or_default(),
                        attr(e, b"target")?.unwrap_or_default(),
                    )),
                    "toolspecific" if parent == Some("transition") => {
                        if attr(e, b"activity")?.as_deref() == Some("$invisible$") {
                            if let Some(t) = transitions.last_mut() {
                                t.invisible = true;
                            }
                        }
                    }
                    _ => {}
                }
                if !empty {
                    stack.push(tag);
                }
            }
            Event::End(e) => {
                let tag = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                stack.pop();
                if tag == "finalmarkings" {
                    in_final = false;
                } else if tag == "marking" && in_final && !finals.is_empty() {
                    final_done = true;
                }
            }
            Event::Text(t) => {
                let value = t
                    .unescape()
                    .map_err(|e| Error::Parse(format!("pnml text: {e}")))?
                    .trim()
                    .to_string();
                let path: Vec<&str> = stack.iter().map(String::as_str).collect();
                let n = path.len();
                if n >= 3 && path[n - 1] == "text" && path[n - 2] == "name" && path[n - 3] == "transition" {
                    if let Some(tr) = transitions.last_mut() {
                        tr.name = Some(value);
                    }
                } else if n >= 3 && path[n - 1] == "text" && path[n - 2] == "initialMarking" && path[n - 3] == "place" {
                    let tokens = value.parse().map_err(|_| Error::Parse(format!("bad token count {value:?}")))?;
                    if let Some(p) = places.last_mut() {
                        p.1 = tokens;
                    }
                } else if in_final && !final_done && n >= 2 && path[n - 1] == "text" && path[n - 2] == "place" {
                    let tokens = value.parse().map_err(|_| Error::Parse(format!("bad token count {value:?}")))?;
                    if let Some(r) = final_ref.take() {
                        finals.push((r, tokens));
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    let place_ix: HashMap<&str, usize> = places.iter().enumerate().map(|(i, p)| (p.0.as_str(), i)).collect();
    let trans_ix: HashMap<&str, usize> = transitions.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let mut nets_t: Vec<Transition> = transitions
        .iter()
        .map(|t| Transition {
            id: t.id.clone(),
            label: if t.invisible { None } else { t.name.clone() },
            inputs: vec![],
            outputs: vec![],
        })
        .collect();
    for (s, d) in &arcs {
        match (place_ix.get(s.as_str()), trans_ix.get(d.as_str()), trans_ix.get(s.as_str()), place_ix.get(d.as_str())) {
            (Some(&p), Some(&t), _, _) => nets_t[t].inputs.push(p),
            (_, _, Some(&t), Some(&p)) => nets_t[t].outputs.push(p),
            _ => return Err(Error::Parse(format!("arc {s} -> {d} does not join a place and a transition"))),
        }
    }
    let initial = places.iter().map(|p| p.1).collect();
    let mut final_marking = vec![0u8; places.len()];
    for (r, k) in finals {
        let p = *place_ix
            .get(r.as_str())
            .ok_or_else(|| Error::Parse(format!("final marking names unknown place {r}")))?;
        final_marking[p] = k;
    }
    let places = places.into_iter().map(|(id, _)| Place { id }).collect();
    PetriNet::new(places, nets_t, initial, final_marking).map_err(|e| Error::Parse(e.to_string()))
}

/// Graphviz rendering: places as circles, visible transitions as labeled
/// boxes, silent ones as filled black bars.
pub fn to_dot(net: &PetriNet) -> String {
    let q = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
    let mut s = String::from("digraph net {\n  rankdir=LR;\n");
    for (i, p) in net.places.iter().enumerate() {
        let tok = if net.initial[i] > 0 { "●" } else { "" };
        let peri = if net.final_marking[i] > 0 { 2 } else { 1 };
        let _ = writeln!(
            s,
            "  \"{}\" [shape=circle, label=\"{tok}\", peripheries={peri}];",
            q(&p.id)
        );
    }
    for t in &net.transitions {
        match &t.label {
            Some(l) => {
                let _ = writeln!(s, "  \"{}\" [shape=box, label=\"{}\"];", q(&t.id), q(l));
            }
            None => {
                let _ = writeln!(
                    s,
                    "  \"{}\" [shape=box, label=\"\", style=filled, fillcolor=black, width=0.15];",
                    q(&t.id)
                );
            }
        }
    }
    for t in &net.transitions {
        for &p in &t.inputs {
            let _ = writeln!(s, "  \"{}\" -> \"{}\";", q(&net.places[p].id), q(&t.id));
        }
        for &p in &t.outputs {
            let _ = writeln!(s, "  \"{}\" -> \"{}\";", q(&t.id), q(&net.places[p].id));
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::{to_petri_net, ProcessTree};

    #[test]
    fn roundtrip() {
        let t = ProcessTree::sequence(vec![
            ProcessTree::activity("p"),
            ProcessTree::parallel(vec![ProcessTree::activity("a<&>"), ProcessTree::activity("l")]),
        ]);
        let net = to_petri_net(&t).unwrap();
        let text = to_pnml(&net, "m");
        assert_eq!(parse_pnml(&text).unwrap(), net);
        assert!(to_dot(&net).contains("a<&>"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_pnml("<pnml><net><page><place id=\"p\"/></page></net>").is_err());
        assert!(parse_pnml("<pnml><arc source=\"x\" target=\"y\"/></pnml>").is_err());
    }
}
