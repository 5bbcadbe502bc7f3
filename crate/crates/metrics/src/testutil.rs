//! Test helper: build a trace with exactly the given markers by driving a
//! bare engine through one tick per marker.

use std::collections::BTreeSet;

use tobsim_engine::{Engine, EventKind, MsgId, NodeId, Stop, Trace, TraceMode, VirtualTime};

pub fn trace_of(
    n: u32,
    byzantine: &[NodeId],
    marks: &[(u64, EventKind, NodeId, u64, MsgId)],
) -> Trace {
    let byz: BTreeSet<NodeId> = byzantine.iter().copied().collect();
    let mut eng: Engine<usize> = Engine::new("test".into(), n, byz, TraceMode::Markers);
    for (i, &(t, ..)) in marks.iter().enumerate() {
        eng.schedule(VirtualTime(t), EventKind::ProtocolTick, 0, 0, 0, i)
            .unwrap();
    }
    let marks = marks.to_vec();
    eng.run(Stop::Quiescent, move |eng, ev| {
        let (_, kind, node, bits, msg) = marks[ev.payload];
        eng.mark(kind, node, bits, msg);
        Ok(())
    })
    .unwrap();
    eng.into_trace()
}
