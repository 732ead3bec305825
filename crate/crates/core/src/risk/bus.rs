//! In-process publish/subscribe broker.

use std::collections::{BTreeMap, VecDeque};

pub const DATAFUSION_POST: &str = "datafusion-post";
pub const RISK: &str = "risk";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubscriberId(usize);

/// Each subscriber has its own queue, so every message published after it
/// subscribed reaches it exactly once, in publish order.
#[derive(Debug)]
pub struct TopicBus<T> {
    topics: BTreeMap<String, Vec<SubscriberId>>,
    queues: Vec<VecDeque<T>>,
}

impl<T> Default for TopicBus<T> {
    fn default() -> Self {
        TopicBus {
            topics: BTreeMap::new(),
            queues: Vec::new(),
        }
    }
}

impl<T: Clone> TopicBus<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&mut self, topic: &str) -> SubscriberId {
        let id = SubscriberId(self.queues.len());
        self.queues.push(VecDeque::new());
        self.topics.entry(topic.to_string()).or_default().push(id);
        id
    }

    /// Returns how many subscribers received the message.
    pub fn publish(&mut self, topic: &str, msg: T) -> usize {
        let Some(subs) = self.topics.get(topic) else { return 0 };
        for s in subs {
            self.queues[s.0].push_back(msg.clone());
        }
        subs.len()
    }

    pub fn poll(&mut self, sub: SubscriberId) -> Option<T> {
        self.queues[sub.0].pop_front()
    }

    pub fn drain(&mut self, sub: SubscriberId) -> Vec<T> {
        self.queues[sub.0].drain(..).collect()
    }

    pub fn pending(&self, sub: SubscriberId) -> usize {
        self.queues[sub.0].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_topic_drops() {
        let mut bus = TopicBus::new();
        assert_eq!(bus.publish("nobody", 1), 0);
        let s = bus.subscribe("a");
        bus.publish("a", 1);
        bus.publish("b", 2);
        assert_eq!(bus.drain(s), vec![1]);
        assert_eq!(bus.poll(s), None);
    }
}
