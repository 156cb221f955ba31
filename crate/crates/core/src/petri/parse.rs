use std::collections::{HashMap, HashSet};

use super::{Marking, NetError, PetriNet, Transition, RESERVED_NAMES};

/// Declarations collected from a model file, each tagged with its line.
#[derive(Default, Debug)]
pub(super) struct SourceLines {
    pub places: Vec<(usize, String)>,
    pub transitions: Vec<(usize, Transition)>,
    pub arcs: Vec<(usize, String, String)>,
    pub initial: Vec<(usize, String, u32)>,
    pub final_marking: Vec<(usize, String, u32)>,
}

/// Parses the line-oriented model format:
///
/// ```text
/// place <id>
/// trans <id> label <activity>
/// trans <id> silent
/// arc <id> <id>
/// init <place> <count>
/// final <place> <count>
/// ```
///
/// `#` starts a comment. Declarations may appear in any order.
pub fn parse_model(text: &str) -> Result<PetriNet, NetError> {
    let mut src = SourceLines::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let syntax = |msg: &str| NetError::Syntax {
            line,
            msg: msg.to_string(),
        };
        match tokens.as_slice() {
            [] => {}
            ["place", id] => src.places.push((line, id.to_string())),
            ["trans", id, "label", activity] => {
                if RESERVED_NAMES.contains(activity) {
                    return Err(NetError::InvalidActivity {
                        line,
                        name: activity.to_string(),
                    });
                }
                src.transitions.push((
                    line,
                    Transition {
                        id: id.to_string(),
                        label: Some(activity.to_string()),
                    },
                ));
            }
            ["trans", id, "silent"] => src.transitions.push((
                line,
                Transition {
                    id: id.to_string(),
                    label: None,
                },
            )),
            ["arc", from, to] => src.arcs.push((line, from.to_string(), to.to_string())),
            ["init", place, count] => {
                let n = count.parse().map_err(|_| syntax("bad token count"))?;
                src.initial.push((line, place.to_string(), n));
            }
            ["final", place, count] => {
                let n = count.parse().map_err(|_| syntax("bad token count"))?;
                src.final_marking.push((line, place.to_string(), n));
            }
            [kw, ..] => {
                return Err(syntax(&format!("unrecognized declaration `{kw}`")));
            }
        }
    }
    src.assemble("model".to_string())
}

impl SourceLines {
    pub(super) fn assemble(self, name: String) -> Result<PetriNet, NetError> {
        let mut seen = HashSet::new();
        for (line, id) in self
            .places
            .iter()
            .map(|(l, p)| (*l, p))
            .chain(self.transitions.iter().map(|(l, t)| (*l, &t.id)))
        {
            if !seen.insert(id.clone()) {
                return Err(NetError::DuplicateId {
                    line,
                    name: id.clone(),
                });
            }
        }
        for (line, t) in &self.transitions {
            if let Some(label) = &t.label {
                if label.is_empty() || RESERVED_NAMES.contains(&label.as_str()) {
                    return Err(NetError::InvalidActivity {
                        line: *line,
                        name: label.clone(),
                    });
                }
            }
        }

        let places: Vec<String> = self.places.into_iter().map(|(_, p)| p).collect();
        let place_index: HashMap<String, usize> = places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let mut transitions: Vec<(usize, Transition)> = self.transitions;
        transitions.sort_by(|a, b| a.1.id.cmp(&b.1.id));
        let transitions: Vec<Transition> = transitions.into_iter().map(|(_, t)| t).collect();
        let trans_index: HashMap<String, usize> = transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();

        let mut preset = vec![Vec::new(); transitions.len()];
        let mut postset = vec![Vec::new(); transitions.len()];
        for (line, from, to) in &self.arcs {
            let unknown = |name: &str| NetError::UnknownNode {
                line: *line,
                name: name.to_string(),
            };
            let (list, node) = match (place_index.get(from), trans_index.get(from)) {
                (Some(&p), _) => {
                    let t = *trans_index.get(to).ok_or_else(|| {
                        if place_index.contains_key(to) {
                            NetError::Syntax {
                                line: *line,
                                msg: format!("arc {from} -> {to} joins two places"),
                            }
                        } else {
                            unknown(to)
                        }
                    })?;
                    (&mut preset[t], p)
                }
                (None, Some(&t)) => {
                    let p = *place_index.get(to).ok_or_else(|| {
                        if trans_index.contains_key(to) {
                            NetError::Syntax {
                                line: *line,
                                msg: format!("arc {from} -> {to} joins two transitions"),
                            }
                        } else {
                            unknown(to)
                        }
                    })?;
                    (&mut postset[t], p)
                }
                (None, None) => return Err(unknown(from)),
            };
            if list.contains(&node) {
                return Err(NetError::DuplicateArc {
                    line: *line,
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            list.push(node);
        }
        for list in preset.iter_mut().chain(postset.iter_mut()) {
            list.sort_unstable();
        }

        let marking = |decls: &[(usize, String, u32)]| -> Result<Marking, NetError> {
            let mut m = Marking::empty(places.len());
            for (line, id, n) in decls {
                let p = *place_index.get(id).ok_or_else(|| NetError::UnknownNode {
                    line: *line,
                    name: id.clone(),
                })?;
                m.add(p, *n);
            }
            Ok(m)
        };
        let initial = marking(&self.initial)?;
        if initial.is_empty() {
            return Err(NetError::MissingInitial);
        }
        let final_marking = marking(&self.final_marking)?;
        if final_marking.is_empty() {
            return Err(NetError::MissingFinal);
        }

        for (t, tr) in transitions.iter().enumerate() {
            if preset[t].is_empty() {
                return Err(NetError::NoInput(tr.id.clone()));
            }
            if postset[t].is_empty() {
                return Err(NetError::NoOutput(tr.id.clone()));
            }
        }

        Ok(PetriNet {
            name,
            places,
            transitions,
            preset,
            postset,
            place_index,
            trans_index,
            initial,
            final_marking,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::fixtures::FN1;

    #[test]
    fn fixture_counts() {
        let net = parse_model(FN1).unwrap();
        assert_eq!(net.n_places(), 7);
        assert_eq!(net.n_transitions(), 7);
        assert_eq!(net.n_silent(), 1);
    }

    #[test]
    fn dangling_arc_names_the_place() {
        let text = format!("{FN1}\narc t6 nowhere\n");
        let err = parse_model(&text).unwrap_err();
        assert!(matches!(err, NetError::UnknownNode { ref name, .. } if name == "nowhere"));
        assert!(err.to_string().contains("nowhere"));
    }

    #[test]
    fn missing_final_line() {
        let text = FN1.replace("final sink 1", "");
        let err = parse_model(&text).unwrap_err();
        assert_eq!(err, NetError::MissingFinal);
        assert_eq!(err.to_string(), "missing final marking");
    }

    #[test]
    fn missing_init_line() {
        let text = FN1.replace("init source 1", "");
        assert_eq!(parse_model(&text).unwrap_err(), NetError::MissingInitial);
    }

    #[test]
    fn duplicate_id_across_kinds() {
        let text = format!("{FN1}\nplace t1\n");
        assert!(matches!(
            parse_model(&text).unwrap_err(),
            NetError::DuplicateId { ref name, .. } if name == "t1"
        ));
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let err = parse_model("place a\nplace b\nwibble x\n").unwrap_err();
        assert!(matches!(err, NetError::Syntax { line: 3, .. }));
        let err = parse_model("place a\ninit a many\n").unwrap_err();
        assert!(matches!(err, NetError::Syntax { line: 2, .. }));
    }

    #[test]
    fn reserved_activity_names_rejected() {
        let err = parse_model("place a\ntrans t label tau\n").unwrap_err();
        assert!(matches!(err, NetError::InvalidActivity { line: 2, .. }));
        let err = parse_model("place a\ntrans t label >>\n").unwrap_err();
        assert!(matches!(err, NetError::InvalidActivity { .. }));
    }

    #[test]
    fn arc_between_places_rejected() {
        let err = parse_model(&format!("{FN1}\narc p1 p2\n")).unwrap_err();
        assert!(matches!(err, NetError::Syntax { .. }));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("# header\n\n{FN1}  # trailing\n");
        assert_eq!(parse_model(&text).unwrap().n_places(), 7);
    }
}
