use std::sync::{Arc, Mutex};

use posflow::geometry::AbsolutePosition;
use posflow::model::{self, DataObject};
use posflow::services::{
    DataService, MemoryDriver, NodeDataService, ServiceError, Services, StorageDriver, TimeService,
    TrajectoryService, VirtualClock,
};
use posflow::units;

#[test]
fn stored_objects_are_copies() {
    let svc = DataService::default();
    let mut obj = DataObject::new("phone").with_name("Phone");
    svc.insert(&obj).unwrap();
    obj.display_name = Some("changed".into());
    let back = svc.get("phone").unwrap().unwrap();
    assert_eq!(back.display_name.as_deref(), Some("Phone"));
}

#[test]
fn store_holds_serialized_text() {
    let driver = Arc::new(MemoryDriver::new());
    let svc = DataService::with_driver("DataObject", driver.clone());
    let obj =
        DataObject::new("beacon").with_position(AbsolutePosition::new_2d(1.0, 2.0, units::meter()));
    svc.insert(&obj).unwrap();
    let text = driver.get("beacon").unwrap().unwrap();
    assert_eq!(text, model::serialize(&obj).unwrap());
}

#[test]
fn insert_text_rejects_mismatched_key() {
    let svc = DataService::default();
    let text = model::serialize(&DataObject::new("a")).unwrap();
    assert!(matches!(
        svc.insert_text("b", text),
        Err(ServiceError::Storage(_))
    ));
    assert!(svc.uids().unwrap().is_empty());
}

#[test]
fn listeners_see_inserts_in_order() {
    let svc = DataService::default();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = seen.clone();
    svc.on_insert(move |uid, _| sink.lock().unwrap().push(uid.to_string()));
    for uid in ["x", "y", "x"] {
        svc.insert(&DataObject::new(uid)).unwrap();
    }
    assert_eq!(*seen.lock().unwrap(), ["x", "y", "x"]);
    assert_eq!(svc.uids().unwrap(), ["x", "y"]);
}

#[test]
fn delete_reports_presence() {
    let svc = DataService::default();
    svc.insert(&DataObject::new("a")).unwrap();
    assert!(svc.delete("a").unwrap());
    assert!(!svc.delete("a").unwrap());
    assert!(svc.get("a").unwrap().is_none());
}

#[test]
fn lookup_walks_type_ancestry() {
    let mut services = Services::new();
    services.add_data_service(Arc::new(DataService::new("ReferenceSpace").named("spaces")));
    let generic = services.find_data_service("DataObject").unwrap();
    assert_eq!(generic.type_name(), "DataObject");
    let spaces = services.find_data_service("ReferenceSpace").unwrap();
    assert_eq!(spaces.name(), "spaces");
    model::register_type("Beacon", "DataObject").unwrap();
    assert_eq!(
        services.find_data_service("Beacon").unwrap().type_name(),
        "DataObject"
    );
    assert!(services.data_service_named("spaces").is_some());
}

#[test]
fn find_object_searches_every_service() {
    let mut services = Services::new();
    let spaces = Arc::new(DataService::new("ReferenceSpace"));
    services.add_data_service(spaces.clone());
    spaces
        .insert(&DataObject::new("room").with_type("ReferenceSpace"))
        .unwrap();
    assert_eq!(services.find_object("room").unwrap().unwrap().uid, "room");
    assert!(services.find_object("nowhere").unwrap().is_none());
}

#[test]
fn node_data_is_keyed_by_node_and_object() {
    let store = NodeDataService::new();
    store.put("n1", "o", &vec![1.0, 2.0]).unwrap();
    store.put("n2", "o", &vec![3.0]).unwrap();
    assert_eq!(
        store.get::<Vec<f64>>("n1", "o").unwrap(),
        Some(vec![1.0, 2.0])
    );
    assert_eq!(store.get::<Vec<f64>>("n2", "o").unwrap(), Some(vec![3.0]));
    assert!(store.delete("n1", "o").unwrap());
    assert_eq!(store.get::<Vec<f64>>("n1", "o").unwrap(), None);
}

#[test]
fn virtual_clock_is_shared() {
    let clock = VirtualClock::new(1_000);
    let time = TimeService::virtual_clock(clock.clone());
    assert!(time.is_virtual());
    assert_eq!(time.now(), 1_000);
    clock.advance(500);
    assert_eq!(time.now(), 1_500);
    time.virtual_handle().unwrap().set(2_000);
    assert_eq!(clock.now(), 2_000);
    clock.set(9);
    assert_eq!(time.now(), 2_000, "clock never runs backwards");
    assert_eq!(time.unit(), units::microsecond());
}

#[test]
fn system_clock_moves_forward() {
    let time = TimeService::system();
    let a = time.now();
    std::thread::sleep(std::time::Duration::from_millis(2));
    assert!(time.now() > a);
    assert!(time.virtual_handle().is_none());
}

#[test]
fn trajectory_queries_by_time_window() {
    let traj = TrajectoryService::new();
    for t in [10, 20, 30, 40] {
        let p = AbsolutePosition::new_2d(t as f64, 0.0, units::meter()).with_timestamp(t);
        traj.append("o", &p).unwrap();
    }
    let window: Vec<i64> = traj
        .query("o", 15, 30)
        .unwrap()
        .iter()
        .map(|p| p.timestamp)
        .collect();
    assert_eq!(window, [20, 30]);
    assert_eq!(traj.latest("o").unwrap().unwrap().timestamp, 40);
    assert_eq!(traj.len("o"), 4);
    assert!(traj.query("other", 0, 100).unwrap().is_empty());
}

#[test]
fn trajectory_rejects_time_going_backwards() {
    let traj = TrajectoryService::new();
    let p = |t| AbsolutePosition::new_2d(0.0, 0.0, units::meter()).with_timestamp(t);
    traj.append("o", &p(10)).unwrap();
    traj.append("o", &p(10)).unwrap();
    let err = traj.append("o", &p(5)).unwrap_err();
    assert_eq!(
        err,
        ServiceError::NonMonotonic {
            object_uid: "o".into(),
            last: 10,
            got: 5
        }
    );
}

#[test]
fn custom_services_downcast() {
    let mut services = Services::new();
    services.add_custom("answer", Arc::new(42u32));
    assert_eq!(*services.custom::<u32>("answer").unwrap(), 42);
    assert!(services.custom::<String>("answer").is_none());
}
