import math

import numpy as np
import pytest

from oow.geom import Pose, quat_from_axis_angle
from oow.world import (AttachmentError, AttachmentState, Body, BoxShape,
                       Capsule, Contact, Sphere, closest_point_on_segment,
                       detect_collisions, integrate_free_bodies, pair_key,
                       resolve_contact)


def sphere_body(bid, kind, pos, r=1.0):
    return Body(bid, kind, Sphere(r), Pose(np.array(pos, dtype=float)))


class TestDetect:
    def test_separated_spheres(self):
        bodies = [sphere_body("arm", "arm_link", [0, 0, 0]),
                  sphere_body("o1", "obstacle", [3, 0, 0])]
        assert detect_collisions(bodies) == []

    def test_overlapping_spheres_normal_on_center_line(self):
        bodies = [sphere_body("arm", "arm_link", [0, 0, 0]),
                  sphere_body("o1", "obstacle", [1.5, 0, 0])]
        contacts = detect_collisions(bodies)
        assert len(contacts) == 1
        c = contacts[0]
        assert np.allclose(c.normal, [1, 0, 0])
        assert c.depth == pytest.approx(0.5)
        assert abs(np.linalg.norm(c.normal) - 1.0) < 1e-9

    def test_capsule_vs_sphere(self):
        # Capsule r=0.3 along x, sphere r=1 at closest distance 1.2 -> overlap 0.1.
        arm = Body("link", "arm_link", Capsule(0.3, (0, 0, 0), (4, 0, 0)))
        obs = sphere_body("o1", "obstacle", [2.0, 1.2, 0.0])
        contacts = detect_collisions([arm, obs])
        assert len(contacts) == 1
        assert contacts[0].depth == pytest.approx(0.1)
        assert np.allclose(contacts[0].normal, [0, 1, 0])

    def test_point_segment_oracle(self):
        # Independent check of the distance the capsule test relies on.
        p = np.array([2.0, 1.2, 0.0])
        cp = closest_point_on_segment(p, np.zeros(3), np.array([4.0, 0, 0]))
        assert np.allclose(cp, [2.0, 0.0, 0.0])
        assert np.linalg.norm(p - cp) == pytest.approx(1.2)

    def test_sphere_vs_box(self):
        mod = Body("mod", "module", BoxShape((2.0, 1.0, 1.0)))
        obs = sphere_body("o1", "obstacle", [2.5, 0, 0], r=0.6)
        contacts = detect_collisions([mod, obs])
        assert len(contacts) == 1
        assert contacts[0].depth == pytest.approx(0.1)

    def test_iss_obstacle_pair_not_detected(self):
        # detection covers {arm|module} x {obstacle|iss} and obstacle pairs only
        iss = Body("iss", "iss", BoxShape((2.0, 1.0, 1.0)))
        obs = sphere_body("o1", "obstacle", [2.5, 0, 0], r=0.6)
        assert detect_collisions([iss, obs]) == []

    def test_capsule_vs_box(self):
        iss = Body("iss", "iss", BoxShape((1.0, 1.0, 1.0)))
        link = Body("link", "arm_link", Capsule(0.3, (-2.0, 0.0, 1.2), (2.0, 0.0, 1.2)))
        contacts = detect_collisions([link, iss])
        assert len(contacts) == 1
        assert contacts[0].depth == pytest.approx(0.1, abs=1e-6)
        assert np.allclose(contacts[0].normal, [0, 0, -1], atol=1e-6)

    def test_box_vs_box_rotated(self):
        a = Body("mod", "module", BoxShape((1.0, 1.0, 1.0)))
        q = quat_from_axis_angle(np.array([0, 0, 1.0]), math.pi / 4)
        b = Body("iss", "iss", BoxShape((1.0, 1.0, 1.0)),
                 Pose(np.array([2.2, 0.0, 0.0]), q))
        contacts = detect_collisions([a, b])
        assert len(contacts) == 1
        # rotated box corner reaches sqrt(2) toward a: overlap along x
        assert contacts[0].normal @ np.array([1.0, 0, 0]) > 0.9

    def test_box_vs_box_separated(self):
        a = Body("mod", "module", BoxShape((1.0, 1.0, 1.0)))
        b = Body("iss", "iss", BoxShape((1.0, 1.0, 1.0)),
                 Pose(np.array([2.2, 2.2, 0.0])))
        assert detect_collisions([a, b]) == []

    def test_unscored_pairs_ignored(self):
        # arm vs arm and arm vs module are not detectable pairs
        bodies = [sphere_body("a1", "arm_link", [0, 0, 0]),
                  sphere_body("a2", "arm_link", [0.5, 0, 0]),
                  sphere_body("mod", "module", [0.2, 0, 0])]
        assert detect_collisions(bodies) == []

    def test_obstacle_obstacle_detected(self):
        bodies = [sphere_body("o1", "obstacle", [0, 0, 0]),
                  sphere_body("o2", "obstacle", [1.5, 0, 0])]
        assert len(detect_collisions(bodies)) == 1

    def test_symmetry_in_argument_order(self):
        a = sphere_body("arm", "arm_link", [0, 0, 0])
        b = sphere_body("o1", "obstacle", [1.5, 0, 0])
        c1 = detect_collisions([a, b])
        c2 = detect_collisions([b, a])
        assert len(c1) == len(c2) == 1
        assert pair_key(c1[0].body_a, c1[0].body_b) == pair_key(c2[0].body_a, c2[0].body_b)
        assert np.allclose(c1[0].point, c2[0].point)

    def test_episode_debounce(self):
        bodies = [sphere_body("arm", "arm_link", [0, 0, 0]),
                  sphere_body("o1", "obstacle", [1.5, 0, 0])]
        first = detect_collisions(bodies)
        assert first[0].episode == "new"
        prev = frozenset(pair_key(c.body_a, c.body_b) for c in first)
        second = detect_collisions(bodies, previous=prev)
        assert second[0].episode == "ongoing"
        # after separation the pair re-arms
        third = detect_collisions(bodies, previous=frozenset())
        assert third[0].episode == "new"


class TestResolve:
    def test_obstacle_pushed_along_normal(self):
        arm = Body("link", "arm_link", Capsule(0.3, (0, 0, 0), (4, 0, 0)))
        obs = sphere_body("o1", "obstacle", [2.0, 1.2, 0.0])
        bodies = {b.id: b for b in (arm, obs)}
        contact = detect_collisions(list(bodies.values()))[0]
        resolve_contact(contact, bodies, dt=0.02)
        assert obs.velocity[1] > 0.0
        assert np.allclose(arm.velocity, 0.0)

    def test_separated_no_change(self):
        arm = sphere_body("arm", "arm_link", [0, 0, 0])
        obs = sphere_body("o1", "obstacle", [5, 0, 0])
        assert detect_collisions([arm, obs]) == []
        assert np.allclose(obs.velocity, 0.0)

    def test_drift_straight_line(self):
        obs = sphere_body("o1", "obstacle", [0, 0, 0])
        obs.velocity = np.array([1.0, 0.5, 0.0])
        for _ in range(10):
            integrate_free_bodies([obs], dt=0.1)
        assert np.allclose(obs.pose.position, [1.0, 0.5, 0.0])

    def test_iss_never_moves(self):
        iss = Body("iss", "iss", BoxShape((2.0, 1.0, 1.0)))
        link = Body("link", "arm_link", Capsule(0.3, (-1.0, 0.0, 1.2), (1.0, 0.0, 1.2)))
        bodies = {b.id: b for b in (iss, link)}
        contact = detect_collisions(list(bodies.values()))[0]
        resolve_contact(contact, bodies, dt=0.02)
        assert np.allclose(iss.velocity, 0.0)
        assert np.allclose(link.velocity, 0.0)

    def test_obstacle_pair_split(self):
        o1 = sphere_body("o1", "obstacle", [0, 0, 0])
        o2 = sphere_body("o2", "obstacle", [1.5, 0, 0])
        bodies = {b.id: b for b in (o1, o2)}
        contact = detect_collisions(list(bodies.values()))[0]
        resolve_contact(contact, bodies, dt=0.02)
        assert o1.velocity[0] < 0 < o2.velocity[0]


class TestAttachment:
    def _module(self):
        return Body("mod", "module", BoxShape((1.0, 1.0, 1.0)),
                    Pose(np.array([5.0, 0.0, 0.0])))

    def test_translation_follows(self):
        mod = self._module()
        st = AttachmentState()
        ee = Pose(np.array([4.0, 0.0, 0.0]))
        st.attach(ee, mod)
        ee2 = Pose(np.array([5.0, 0.0, 0.0]))
        st.update(ee2, mod)
        assert np.allclose(mod.pose.position, [6.0, 0.0, 0.0])

    def test_rotation_about_ee(self):
        mod = self._module()
        st = AttachmentState()
        ee = Pose(np.array([4.0, 0.0, 0.0]))
        st.attach(ee, mod)
        q = quat_from_axis_angle(np.array([0, 0, 1.0]), math.pi / 2)
        st.update(Pose(np.array([4.0, 0.0, 0.0]), q), mod)
        # module was 1 m along +x from ee; now 1 m along +y
        assert np.allclose(mod.pose.position, [4.0, 1.0, 0.0], atol=1e-12)
        from oow.geom import angular_distance_deg
        assert angular_distance_deg(mod.pose.orientation, q) == pytest.approx(0.0, abs=1e-9)

    def test_relative_pose_constant_across_ticks(self):
        mod = self._module()
        st = AttachmentState()
        ee = Pose(np.array([4.0, 0.0, 0.0]))
        st.attach(ee, mod)
        rng = np.random.default_rng(5)
        for _ in range(25):
            q = quat_from_axis_angle(rng.normal(size=3) + 1e-3, rng.uniform(0, 3))
            ee = Pose(rng.normal(size=3), q)
            st.update(ee, mod)
            rel = ee.inverse().compose(mod.pose)
            assert np.allclose(rel.position, [1.0, 0.0, 0.0], atol=1e-9)

    def test_detach_freezes(self):
        mod = self._module()
        st = AttachmentState()
        st.attach(Pose(np.array([4.0, 0.0, 0.0])), mod)
        st.detach(mod)
        pos = mod.pose.position.copy()
        st.update(Pose(np.array([40.0, 0.0, 0.0])), mod)
        assert np.allclose(mod.pose.position, pos)

    def test_double_attach_raises(self):
        mod = self._module()
        st = AttachmentState()
        st.attach(Pose(), mod)
        with pytest.raises(AttachmentError):
            st.attach(Pose(), mod)

    def test_detach_unattached_raises(self):
        with pytest.raises(AttachmentError):
            AttachmentState().detach(self._module())
