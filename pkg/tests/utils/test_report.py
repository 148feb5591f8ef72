import json
import os

import numpy as np
from testfixtures import TempDirectory

from tests.helpers.base_acic_test_case import BaseACICTestCase

from acic.utils.report import format_csv_value, to_builtin, write_csv, write_json

class TestToBuiltin(BaseACICTestCase):
    def test_numpy_values(self):
        converted = to_builtin({
            'lambda': np.float64(1.5),
            'count': np.int64(3),
            'flag': np.bool_(True),
            'w': np.array([0.0, 1.0]),
            'pairs': (np.int32(1), 'x'),
            7: None
        })

        self.assertEqual(converted, {
            'lambda': 1.5,
            'count': 3,
            'flag': True,
            'w': [0.0, 1.0],
            'pairs': [1, 'x'],
            '7': None
        })
        self.assertIs(type(converted['lambda']), float)
        self.assertIs(type(converted['count']), int)
        self.assertIs(type(converted['flag']), bool)

    def test_non_finite_becomes_none(self):
        self.assertEqual(to_builtin([np.inf, -np.inf, np.nan, 2.0]), [None, None, None, 2.0])

class TestFormatCsvValue(BaseACICTestCase):
    def test_values(self):
        self.assertEqual(format_csv_value(None), '')
        self.assertEqual(format_csv_value(True), 'true')
        self.assertEqual(format_csv_value(np.bool_(False)), 'false')
        self.assertEqual(format_csv_value(np.int64(12)), '12')
        self.assertEqual(format_csv_value(0.1), '0.10000000000000001')
        self.assertEqual(format_csv_value(2.0), '2')
        self.assertEqual(format_csv_value('impulse'), 'impulse')

class TestWrite(BaseACICTestCase):
    def test_write_json_sorted_and_stable(self):
        with TempDirectory() as temp_dir:
            path = os.path.join(temp_dir.path, 'nested', 'report.json')
            written = write_json(path, {'b': np.float64(2.0), 'a': [1, 2]})

            self.assertEqual(written, path)
            with open(path) as report_file:
                contents = report_file.read()
            self.assertEqual(
                contents, '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 2.0\n}\n')
            self.assertEqual(json.loads(contents), {'a': [1, 2], 'b': 2.0})

    def test_write_json_twice_is_identical(self):
        with TempDirectory() as temp_dir:
            data = {'w': np.linspace(0.0, 1.0, 7), 'lambda': 1 / 3}
            first = write_json(os.path.join(temp_dir.path, 'first.json'), data)
            second = write_json(os.path.join(temp_dir.path, 'second.json'), data)

            with open(first) as first_file, open(second) as second_file:
                self.assertEqual(first_file.read(), second_file.read())

    def test_write_csv(self):
        with TempDirectory() as temp_dir:
            path = write_csv(
                os.path.join(temp_dir.path, 'table.csv'),
                ['m', 'alpha', 'lambda', 'flag'],
                [[1, 0.5, 1 / 3, True], [2, 0.0, None, False]])

            with open(path) as table_file:
                self.assertEqual(
                    table_file.read(),
                    'm,alpha,lambda,flag\n'
                    '1,0.5,0.33333333333333331,true\n'
                    '2,0,,false\n')
