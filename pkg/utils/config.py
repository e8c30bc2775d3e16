"""
Configuration Manager - Experiment settings from defaults, files and flags
"""

import configparser
import json
import logging
from pathlib import Path

from core.blackbox import PredictionFile, SubprocessOracle
from core.cortex_tree import TreeParams
from core.errors import ConfigurationError
from core.experiment import METHODS, RunConfig
from utils.validators import SettingsValidator

logger = logging.getLogger(__name__)

SECTIONS = ('DATA', 'ORACLE', 'TREE', 'EVALUATION', 'OUTPUT', 'ADVANCED')

# flag names and RunConfig fields that differ from the settings key
SETTING_ALIASES = {
    'min_leaf': 'min_samples_leaf',
    'out': 'out_dir',
    'format': 'formats',
    'data_path': 'data',
}

PER_METHOD_KEYS = ('max_depth', 'min_samples_leaf')


def setting_key(name):
    """Settings key for a flag name, flag dest or RunConfig field"""
    name = name.replace('-', '_')
    return SETTING_ALIASES.get(name, name)


class Config:
    """
    Settings store for the experiment harness

    Values live in a ConfigParser as strings, grouped by section, and are
    converted by key type on the way out. Precedence: defaults < file < flags.
    """

    def __init__(self, config_file=None):
        self.config = configparser.ConfigParser(interpolation=None)
        self.source = None
        self.restore_defaults()
        if config_file:
            self.load_file(config_file)

    def get_default_settings(self):
        """
        Get default experiment settings

        Returns:
            dict: Default settings
        """
        return {
            # Data
            'data': None,
            'target': 'class',
            'dataset_name': None,
            'train_fraction': 0.7,
            'stratified': True,

            # Black box
            'predictions': None,
            'predictions_column': None,
            'oracle_cmd': None,
            'oracle_timeout': 60.0,
            'oracle_cwd': None,

            # Trees
            'cost_matrix': 'default',
            'minority_cost': None,
            'max_depth': 20,
            'min_samples_leaf': 1,
            'min_gain': 1e-12,
            'max_thresholds': None,
            'cortex_max_depth': None,
            'cortex_min_samples_leaf': None,
            'dt_max_depth': None,
            'dt_min_samples_leaf': None,

            # Evaluation
            'repeats': 100,
            'seed': 0,
            'noise_sigma': 0.1,
            'alpha': 0.05,
            'methods': ['cortex', 'dt'],
            'holdout_fraction': None,

            # Output
            'out_dir': 'results',
            'formats': ['json', 'csv', 'text'],

            # Advanced
            'parallel': 1,
            'log_level': 'INFO',
        }

    def restore_defaults(self):
        """Restore all settings to defaults"""
        for section in self.config.sections():
            self.config.remove_section(section)
        for section in SECTIONS:
            self.config.add_section(section)
        for key, value in self.get_default_settings().items():
            self.set_setting(key, value)

    def load_file(self, path):
        """
        Merge settings from a .json document or an .ini/.cfg file

        Args:
            path (str): Settings file
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file does not exist: {path}")

        if path.suffix.lower() == '.json':
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    document = json.load(f)
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                raise ConfigurationError(f"{path.name}: not a JSON document: {e}")
            if not isinstance(document, dict):
                raise ConfigurationError(f"{path.name}: settings must be a JSON object")
            self.update(document)
        else:
            parser = configparser.ConfigParser(interpolation=None)
            try:
                parser.read(path, encoding='utf-8')
            except configparser.Error as e:
                raise ConfigurationError(f"{path.name}: {e}")
            self.update({key: value for section in parser.sections()
                         for key, value in parser.items(section)})

        self.source = str(path)
        logger.info(f"Loaded settings from: {path}")

    def update(self, settings):
        """
        Apply several settings; None values are skipped and unknown keys ignored

        Keys may be settings keys, flag names (`min-leaf`, `out`, `format`)
        or the fields of a report's config echo (`data_path`, `predictor`,
        `cortex_params`, `dt_params`, `out_dir`).

        Args:
            settings (dict): key -> value
        """
        defaults = self.get_default_settings()
        for key, value in settings.items():
            key = setting_key(key)
            if value is None:
                continue
            if key == 'predictor':
                self._set_predictor(value)
            elif key.endswith('_params') and key[:-len('_params')] in METHODS:
                self._set_tree_params(key[:-len('_params')], value)
            elif key not in defaults:
                logger.warning(f"Ignoring unknown setting '{key}'")
            else:
                self.set_setting(key, value)

    def apply_flags(self, flags):
        """
        Apply command-line values on top of defaults and file settings

        A shared tree flag also clears the per-method values of that key, so
        `--max-depth` wins over `cortex_max_depth` from a file.

        Args:
            flags (dict): settings key -> value, None for flags not given
        """
        for key in PER_METHOD_KEYS:
            if flags.get(key) is not None:
                for method in METHODS:
                    self.set_setting(f'{method}_{key}', None)
        self.update(flags)

    def _set_predictor(self, description):
        # "file:<path>" or "oracle:<command>", as written by PredictorSource.describe
        kind, _, target = str(description).partition(':')
        if kind == 'file' and target:
            self.set_setting('predictions', target)
        elif kind == 'oracle' and target:
            self.set_setting('oracle_cmd', target)
        else:
            raise ConfigurationError(f"invalid value for 'predictor': {description}")

    def _set_tree_params(self, method, params):
        if not isinstance(params, dict):
            raise ConfigurationError(f"invalid value for '{method}_params': expected an object")
        for name, value in params.items():
            if value is None:
                continue
            if name in PER_METHOD_KEYS:
                self.set_setting(f'{method}_{name}', value)
            elif name in ('min_gain', 'max_thresholds'):
                self.set_setting(name, value)
            else:
                logger.warning(f"Ignoring unknown setting '{method}_params.{name}'")

    def get_setting(self, key, default=None):
        """
        Get a specific setting value

        Args:
            key (str): Setting key
            default: Default value if key not found

        Returns:
            Setting value with appropriate type conversion
        """
        section = self._get_setting_section(key)
        if not self.config.has_option(section, key):
            return default
        return self._convert_setting_value(key, self.config.get(section, key))

    def set_setting(self, key, value):
        """
        Set a specific setting value

        Args:
            key (str): Setting key
            value: Setting value
        """
        section = self._get_setting_section(key)
        if value is None:
            str_value = ''
        elif isinstance(value, (list, tuple)):
            str_value = json.dumps(list(value))
        else:
            str_value = str(value)
        self.config.set(section, key, str_value)

    def get_all_settings(self):
        """
        Get all settings as a dictionary

        Returns:
            dict: All settings with proper type conversion
        """
        return {key: self._convert_setting_value(key, value)
                for section in self.config.sections()
                for key, value in self.config.items(section)}

    def export_settings(self, export_path=None):
        """
        Resolved settings, optionally written as JSON for reuse with --config

        Args:
            export_path (str): Path to export file

        Returns:
            dict: All settings
        """
        settings = self.get_all_settings()
        if export_path:
            with open(export_path, 'w', encoding='utf-8') as f:
                json.dump(settings, f, indent=2)
            logger.info(f"Settings exported to: {export_path}")
        return settings

    def _get_setting_section(self, key):
        """
        Determine which section a setting belongs to

        Args:
            key (str): Setting key

        Returns:
            str: Section name
        """
        data_keys = ['data', 'target', 'dataset_name', 'train_fraction', 'stratified']

        oracle_keys = ['predictions', 'predictions_column', 'oracle_cmd', 'oracle_timeout', 'oracle_cwd']

        tree_keys = ['cost_matrix', 'minority_cost', 'max_depth', 'min_samples_leaf', 'min_gain',
                     'max_thresholds', 'cortex_max_depth', 'cortex_min_samples_leaf',
                     'dt_max_depth', 'dt_min_samples_leaf']

        evaluation_keys = ['repeats', 'seed', 'noise_sigma', 'alpha', 'methods', 'holdout_fraction']

        output_keys = ['out_dir', 'formats']

        if key in data_keys:
            return 'DATA'
        elif key in oracle_keys:
            return 'ORACLE'
        elif key in tree_keys:
            return 'TREE'
        elif key in evaluation_keys:
            return 'EVALUATION'
        elif key in output_keys:
            return 'OUTPUT'
        else:
            return 'ADVANCED'

    def _convert_setting_value(self, key, value):
        """
        Convert setting value from string to appropriate type

        Args:
            key (str): Setting key
            value (str): String value from the parser

        Returns:
            Converted value with appropriate type; None for empty optional values
        """
        # Boolean settings
        bool_keys = ['stratified']

        # Integer settings
        int_keys = ['max_depth', 'min_samples_leaf', 'max_thresholds', 'cortex_max_depth',
                    'cortex_min_samples_leaf', 'dt_max_depth', 'dt_min_samples_leaf',
                    'repeats', 'seed', 'parallel']

        # Float settings
        float_keys = ['train_fraction', 'oracle_timeout', 'minority_cost', 'min_gain',
                      'noise_sigma', 'alpha', 'holdout_fraction']

        # List settings
        list_keys = ['methods', 'formats']

        value = value.strip()
        if value == '' or value.lower() == 'none':
            return None

        try:
            if key in bool_keys:
                if value.lower() not in ('true', '1', 'yes', 'on', 'false', '0', 'no', 'off'):
                    raise ValueError(f"not a boolean: {value}")
                return value.lower() in ('true', '1', 'yes', 'on')
            elif key in int_keys:
                number = float(value)
                if number != int(number):
                    raise ValueError(f"not an integer: {value}")
                return int(number)
            elif key in float_keys:
                return float(value)
            elif key in list_keys:
                if value.startswith('[') and value.endswith(']'):
                    return [str(item) for item in json.loads(value)]
                return [item.strip() for item in value.split(',') if item.strip()]
            else:
                return value

        except (ValueError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"invalid value for '{key}': {e}")

    def _validated(self, result):
        ok, value, message = result
        if not ok:
            raise ConfigurationError(message)
        return value

    def tree_params(self, method):
        """Hyperparameters of one method; per-method keys override the shared ones"""
        get = self.get_setting
        depth = get(f'{method}_max_depth')
        leaf = get(f'{method}_min_samples_leaf')
        return TreeParams(
            max_depth=self._validated(SettingsValidator.validate_count(
                get('max_depth') if depth is None else depth, 'max_depth', minimum=0)),
            min_samples_leaf=self._validated(SettingsValidator.validate_count(
                get('min_samples_leaf') if leaf is None else leaf, 'min_samples_leaf')),
            min_gain=self._validated(SettingsValidator.validate_nonnegative(get('min_gain'), 'min_gain')),
            max_thresholds=self._validated(SettingsValidator.validate_optional_count(
                get('max_thresholds'), 'max_thresholds')),
        )

    def predictor(self):
        """Prediction source named by the settings"""
        predictions = self.get_setting('predictions')
        command = self.get_setting('oracle_cmd')
        if predictions and command:
            raise ConfigurationError("give either a prediction file or an oracle command, not both")
        if predictions:
            return PredictionFile(predictions, self.get_setting('predictions_column'))
        if command:
            timeout = self.get_setting('oracle_timeout')
            if timeout is None or not timeout > 0:
                raise ConfigurationError(f"oracle timeout must be positive, got {timeout}")
            return SubprocessOracle(command, self.get_setting('oracle_cwd'), timeout)
        raise ConfigurationError("a prediction file (--predictions) or an oracle command (--oracle-cmd) is required")

    def to_run_config(self):
        """
        Validate every setting and build the experiment configuration

        Returns:
            RunConfig: Frozen, validated settings
        """
        get = self.get_setting
        v = SettingsValidator

        data = get('data')
        if not data:
            raise ConfigurationError("a data file (--data) is required")

        holdout = get('holdout_fraction')
        if holdout is not None:
            holdout = self._validated(v.validate_fraction(holdout, 'holdout_fraction'))

        minority_cost = get('minority_cost')
        if minority_cost is not None and not minority_cost > 0:
            raise ConfigurationError(f"minority cost must be positive, got {minority_cost}")

        return RunConfig(
            data_path=data,
            target=get('target') or 'class',
            predictor=self.predictor(),
            cost_matrix=self._validated(v.validate_cost_matrix(get('cost_matrix'))),
            minority_cost=minority_cost,
            train_fraction=self._validated(v.validate_fraction(get('train_fraction'))),
            repeats=self._validated(v.validate_count(get('repeats'), 'repeats')),
            seed=self._validated(v.validate_count(get('seed'), 'seed', minimum=0)),
            noise_sigma=self._validated(v.validate_nonnegative(get('noise_sigma'), 'noise_sigma')),
            stratified=get('stratified') is not False,
            holdout_fraction=holdout,
            alpha=self._validated(v.validate_fraction(get('alpha'), 'alpha')),
            cortex_params=self.tree_params('cortex'),
            dt_params=self.tree_params('dt'),
            methods=self._validated(v.validate_methods(get('methods'))),
            out_dir=get('out_dir') or 'results',
            formats=self._validated(v.validate_formats(get('formats'))),
            parallel=self._validated(v.validate_count(get('parallel'), 'parallel')),
            dataset_name=get('dataset_name'),
        )
