//! Structural validation of the NeTEx subset emitted by the bundled
//! templates. This is not XSD validation: six rules cover the shape the
//! downstream consumers rely on.

use std::collections::{HashMap, HashSet};

use super::xml::{parse_xml, XmlElement};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
    pub location: String,
}

#[derive(Clone, Debug, Default)]
pub struct NetexSubsetReport {
    pub well_formed: bool,
    pub violations: Vec<Violation>,
}

impl NetexSubsetReport {
    pub fn is_valid(&self) -> bool {
        self.well_formed && self.violations.is_empty()
    }
}

/// Checks, in order:
/// R1 well-formed XML;
/// R2 root `PublicationDelivery` with `PublicationTimestamp`,
///    `ParticipantRef` and `dataObjects` children;
/// R3 a `CompositeFrame` containing `ResourceFrame`, `ServiceFrame` and
///    `TimetableFrame`;
/// R4 `id` attributes unique document-wide and non-empty;
/// R5 every `ScheduledStopPointRef/@ref` resolves to a declared
///    `ScheduledStopPoint` id;
/// R6 every `ServiceJourney` has at least two passing-time entries with
///    strictly increasing `order`.
pub fn validate_netex_subset(xml: &[u8]) -> NetexSubsetReport {
    let mut report = NetexSubsetReport::default();
    let root = match parse_xml(xml) {
        Ok(root) => {
            report.well_formed = true;
            root
        }
        Err(e) => {
            report.violations.push(Violation {
                rule: "R1",
                message: format!("not well-formed XML: {e}"),
                location: "/".into(),
            });
            return report;
        }
    };

    check_r2(&root, &mut report.violations);
    check_r3(&root, &mut report.violations);
    check_r4(&root, &mut report.violations);
    check_r5(&root, &mut report.violations);
    check_r6(&root, &mut report.violations);
    report
}

fn check_r2(root: &XmlElement, out: &mut Vec<Violation>) {
    if root.name != "PublicationDelivery" {
        out.push(Violation {
            rule: "R2",
            message: format!("root element is <{}>, expected <PublicationDelivery>", root.name),
            location: format!("/{}", root.name),
        });
        return;
    }
    for required in ["PublicationTimestamp", "ParticipantRef", "dataObjects"] {
        if !root.has_child(required) {
            out.push(Violation {
                rule: "R2",
                message: format!("missing <{required}> under the root"),
                location: "/PublicationDelivery".into(),
            });
        }
    }
}

fn check_r3(root: &XmlElement, out: &mut Vec<Violation>) {
    let frames = root.descendants("CompositeFrame");
    if frames.is_empty() {
        out.push(Violation {
            rule: "R3",
            message: "no <CompositeFrame> in the document".into(),
            location: "/PublicationDelivery".into(),
        });
        return;
    }
    for frame in frames {
        for required in ["ResourceFrame", "ServiceFrame", "TimetableFrame"] {
            if frame.descendants(required).is_empty() {
                out.push(Violation {
                    rule: "R3",
                    message: format!("CompositeFrame lacks a <{required}>"),
                    location: frame
                        .attr("id")
                        .map(|id| format!("CompositeFrame[@id={id}]"))
                        .unwrap_or_else(|| "CompositeFrame".into()),
                });
            }
        }
    }
}

fn check_r4(root: &XmlElement, out: &mut Vec<Violation>) {
    let mut seen: HashMap<String, String> = HashMap::new();
    root.walk(&mut |element, path| {
        if let Some(id) = element.attr("id") {
            if id.is_empty() {
                out.push(Violation {
                    rule: "R4",
                    message: "empty id attribute".into(),
                    location: path.to_string(),
                });
            } else if let Some(first) = seen.insert(id.to_string(), path.to_string()) {
                out.push(Violation {
                    rule: "R4",
                    message: format!("duplicate id {id:?} (first at {first})"),
                    location: path.to_string(),
                });
            }
        }
    });
}

fn check_r5(root: &XmlElement, out: &mut Vec<Violation>) {
    let declared: HashSet<&str> = root
        .descendants("ScheduledStopPoint")
        .into_iter()
        .filter_map(|e| e.attr("id"))
        .collect();
    root.walk(&mut |element, path| {
        if element.name == "ScheduledStopPointRef" {
            match element.attr("ref") {
                Some(r) if declared.contains(r) => {}
                Some(r) => out.push(Violation {
                    rule: "R5",
                    message: format!("unresolved stop reference {r:?}"),
                    location: path.to_string(),
                }),
                None => out.push(Violation {
                    rule: "R5",
                    message: "ScheduledStopPointRef without a ref attribute".into(),
                    location: path.to_string(),
                }),
            }
        }
    });
}

fn check_r6(root: &XmlElement, out: &mut Vec<Violation>) {
    for journey in root.descendants("ServiceJourney") {
        let location = journey
            .attr("id")
            .map(|id| format!("ServiceJourney[@id={id}]"))
            .unwrap_or_else(|| "ServiceJourney".into());
        let passing_times = journey.descendants("TimetabledPassingTime");
        if passing_times.len() < 2 {
            out.push(Violation {
                rule: "R6",
                message: format!(
                    "expected at least 2 passing times, found {}",
                    passing_times.len()
                ),
                location,
            });
            continue;
        }
        let mut previous: Option<i64> = None;
        for pt in passing_times {
            let order = pt.attr("order").and_then(|o| o.parse::<i64>().ok());
            match (order, previous) {
                (None, _) => {
                    out.push(Violation {
                        rule: "R6",
                        message: "passing time without a numeric order attribute".into(),
                        location: location.clone(),
                    });
                    break;
                }
                (Some(o), Some(p)) if o <= p => {
                    out.push(Violation {
                        rule: "R6",
                        message: format!("order not strictly increasing ({p} then {o})"),
                        location: location.clone(),
                    });
                    break;
                }
                (Some(o), _) => previous = Some(o),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(frames_inner: &str) -> String {
        format!(
            "<PublicationDelivery version=\"1.0\">\
             <PublicationTimestamp>2024-01-01T00:00:00Z</PublicationTimestamp>\
             <ParticipantRef>crosswalk</ParticipantRef>\
             <dataObjects><CompositeFrame id=\"CompositeFrame:1\"><frames>{frames_inner}</frames></CompositeFrame></dataObjects>\
             </PublicationDelivery>"
        )
    }

    fn minimal_frames() -> String {
        "<ResourceFrame id=\"ResourceFrame:1\"/>\
         <ServiceFrame id=\"ServiceFrame:1\"><scheduledStopPoints>\
           <ScheduledStopPoint id=\"ScheduledStopPoint:S1\"/>\
           <ScheduledStopPoint id=\"ScheduledStopPoint:S2\"/>\
         </scheduledStopPoints></ServiceFrame>\
         <TimetableFrame id=\"TimetableFrame:1\"><vehicleJourneys>\
           <ServiceJourney id=\"ServiceJourney:T1\"><passingTimes>\
             <TimetabledPassingTime order=\"1\"><ScheduledStopPointRef ref=\"ScheduledStopPoint:S1\"/></TimetabledPassingTime>\
             <TimetabledPassingTime order=\"2\"><ScheduledStopPointRef ref=\"ScheduledStopPoint:S2\"/></TimetabledPassingTime>\
           </passingTimes></ServiceJourney>\
         </vehicleJourneys></TimetableFrame>"
            .to_string()
    }

    #[test]
    fn minimal_document_is_valid() {
        let report = validate_netex_subset(wrap(&minimal_frames()).as_bytes());
        assert!(report.well_formed);
        assert_eq!(report.violations, vec![], "{:?}", report.violations);
    }

    #[test]
    fn malformed_xml_is_r1() {
        let report = validate_netex_subset(b"<PublicationDelivery>");
        assert!(!report.well_formed);
        assert_eq!(report.violations[0].rule, "R1");
    }

    #[test]
    fn missing_root_children_is_r2() {
        let report =
            validate_netex_subset(b"<PublicationDelivery><dataObjects/></PublicationDelivery>");
        let rules: Vec<&str> = report.violations.iter().map(|v| v.rule).collect();
        assert_eq!(rules, ["R2", "R2", "R3"]);
    }

    #[test]
    fn missing_frame_is_r3() {
        let frames = minimal_frames().replace(
            "<ResourceFrame id=\"ResourceFrame:1\"/>",
            "",
        );
        let report = validate_netex_subset(wrap(&frames).as_bytes());
        assert!(report.violations.iter().any(|v| v.rule == "R3"), "{:?}", report.violations);
    }

    #[test]
    fn duplicate_id_is_r4() {
        let frames = minimal_frames().replace("ScheduledStopPoint:S2", "ScheduledStopPoint:S1");
        let report = validate_netex_subset(wrap(&frames).as_bytes());
        assert!(
            report.violations.iter().any(|v| v.rule == "R4" && v.message.contains("ScheduledStopPoint:S1")),
            "{:?}",
            report.violations
        );
    }

    #[test]
    fn dangling_stop_ref_is_r5() {
        let frames = minimal_frames().replace(
            "ref=\"ScheduledStopPoint:S2\"",
            "ref=\"ScheduledStopPoint:MISSING\"",
        );
        let report = validate_netex_subset(wrap(&frames).as_bytes());
        assert!(report.violations.iter().any(|v| v.rule == "R5"), "{:?}", report.violations);
    }

    #[test]
    fn single_passing_time_is_r6() {
        let frames = minimal_frames().replace(
            "<TimetabledPassingTime order=\"2\"><ScheduledStopPointRef ref=\"ScheduledStopPoint:S2\"/></TimetabledPassingTime>",
            "",
        );
        let report = validate_netex_subset(wrap(&frames).as_bytes());
        assert!(
            report.violations.iter().any(|v| v.rule == "R6" && v.message.contains("found 1")),
            "{:?}",
            report.violations
        );
    }

    #[test]
    fn non_increasing_order_is_r6() {
        let frames = minimal_frames().replace("order=\"2\"", "order=\"1\"");
        let report = validate_netex_subset(wrap(&frames).as_bytes());
        assert!(
            report.violations.iter().any(|v| v.rule == "R6" && v.message.contains("strictly")),
            "{:?}",
            report.violations
        );
    }
}
