//! The shared message pool.
//!
//! Every role publishes into one append-only log. Roles read through a
//! [`Subscription`] that filters by the actions they watch (or by explicit
//! addressing) and remembers how far they have read. All operations take the
//! pool lock once, so each is atomic with respect to the others.

pub mod log;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::Utc;

use crate::model::{ActionKind, Message, MessageDraft, RoleProfile};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PoolError {
    #[error("message content is empty")]
    EmptyContent,
    #[error("unknown subscription {0:?}")]
    UnknownSubscription(SubscriptionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubscriptionId(u64);

/// A reader's interest set and position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    pub subscriber: String,
    pub interests: BTreeSet<ActionKind>,
    /// Highest sequence number already seen; `None` before the first fetch.
    pub cursor: Option<u64>,
}

impl Subscription {
    fn wants(&self, msg: &Message) -> bool {
        self.interests.contains(&msg.cause_by) || msg.is_addressed_to(&self.subscriber)
    }

    fn unseen<'a>(&self, messages: &'a [Arc<Message>]) -> &'a [Arc<Message>] {
        let start = self.cursor.map_or(0, |c| c as usize + 1);
        messages.get(start..).unwrap_or(&[])
    }
}

#[derive(Default)]
struct PoolState {
    messages: Vec<Arc<Message>>,
    kinds_seen: BTreeSet<ActionKind>,
    subscriptions: HashMap<SubscriptionId, Subscription>,
    next_subscription: u64,
}

#[derive(Default)]
pub struct MessagePool {
    state: Mutex<PoolState>,
}

impl MessagePool {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, PoolState> {
        // A panic while holding the lock cannot leave the log half-appended,
        // so the data is still consistent.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Registers `role` with its watched actions as the interest set.
    pub fn subscribe(&self, role: &RoleProfile) -> SubscriptionId {
        self.subscribe_with(&role.name, role.watched_actions.iter().copied())
    }

    pub fn subscribe_with(
        &self,
        subscriber: &str,
        interests: impl IntoIterator<Item = ActionKind>,
    ) -> SubscriptionId {
        let mut state = self.lock();
        let id = SubscriptionId(state.next_subscription);
        state.next_subscription += 1;
        state.subscriptions.insert(
            id,
            Subscription {
                subscriber: subscriber.to_string(),
                interests: interests.into_iter().collect(),
                cursor: None,
            },
        );
        id
    }

    pub fn subscription(&self, id: SubscriptionId) -> Option<Subscription> {
        self.lock().subscriptions.get(&id).cloned()
    }

    /// Appends a message and returns its sequence number.
    pub fn publish(&self, draft: MessageDraft) -> Result<u64, PoolError> {
        if draft.content.is_empty() {
            return Err(PoolError::EmptyContent);
        }
        let mut state = self.lock();
        let seq = state.messages.len() as u64;
        state.kinds_seen.insert(draft.cause_by);
        state.messages.push(Arc::new(Message {
            seq,
            sent_from: draft.sent_from,
            cause_by: draft.cause_by,
            content: draft.content,
            send_to: draft.send_to,
            timestamp: Utc::now(),
        }));
        Ok(seq)
    }

    /// Messages the subscriber has not seen yet that match its interests or
    /// name it as an addressee, in sequence order. Moves the cursor to the
    /// newest message in the pool.
    pub fn fetch_new(&self, id: SubscriptionId) -> Result<Vec<Arc<Message>>, PoolError> {
        let mut state = self.lock();
        let PoolState {
            messages,
            subscriptions,
            ..
        } = &mut *state;
        let sub = subscriptions
            .get_mut(&id)
            .ok_or(PoolError::UnknownSubscription(id))?;
        let fresh: Vec<Arc<Message>> = sub
            .unseen(messages)
            .iter()
            .filter(|m| sub.wants(m))
            .cloned()
            .collect();
        if let Some(last) = messages.last() {
            sub.cursor = Some(last.seq);
        }
        Ok(fresh)
    }

    /// Whether `fetch_new` would return anything, without moving the cursor.
    pub fn has_pending(&self, id: SubscriptionId) -> Result<bool, PoolError> {
        let state = self.lock();
        let sub = state
            .subscriptions
            .get(&id)
            .ok_or(PoolError::UnknownSubscription(id))?;
        Ok(sub.unseen(&state.messages).iter().any(|m| sub.wants(m)))
    }

    /// True iff every prerequisite action has at least one message.
    pub fn ready(&self, prerequisites: &BTreeSet<ActionKind>) -> bool {
        let state = self.lock();
        prerequisites.is_subset(&state.kinds_seen)
    }

    /// Full copy of the log. Does not touch any cursor.
    pub fn snapshot(&self) -> Vec<Arc<Message>> {
        self.lock().messages.clone()
    }

    pub fn get(&self, seq: u64) -> Option<Arc<Message>> {
        self.lock().messages.get(seq as usize).cloned()
    }

    pub fn len(&self) -> usize {
        self.lock().messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
