import dataclasses
import json
import os
import types
from argparse import SUPPRESS, ArgumentDefaultsHelpFormatter, ArgumentParser, ArgumentTypeError, Namespace
from enum import Enum
from inspect import isclass
from typing import Any, Callable, Dict, Iterable, List, Literal, NewType, Optional, Sequence, Tuple, Union, \
    get_type_hints

import yaml

from util.errors import ConfigError

DataClass = NewType("DataClass", Any)
DataClassType = NewType("DataClassType", Any)

CONFIG_FLAG = "config"


def string_to_bool(v):
    if isinstance(v, bool):
        return v
    if v.lower() in ("yes", "true", "t", "y", "1"):
        return True
    if v.lower() in ("no", "false", "f", "n", "0"):
        return False
    raise ArgumentTypeError(f"truthy value expected, got {v}")


def make_choice_type_function(choices: list) -> Callable[[str], Any]:
    str_to_choice = {str(choice): choice for choice in choices}
    return lambda arg: str_to_choice.get(arg, arg)


def _unwrap_optional(tp):
    origin = getattr(tp, "__origin__", tp)
    if origin is Union or (hasattr(types, "UnionType") and isinstance(tp, types.UnionType)):
        args = [a for a in tp.__args__ if a is not type(None)]
        if len(args) != 1:
            raise ValueError(f"only Optional[X] unions are supported, got {tp}")
        return args[0]
    return tp


def load_config_file(path: str) -> Dict[str, Any]:
    """
    JSON or YAML mapping, chosen by extension (YAML otherwise, which also reads JSON)
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text) if path.lower().endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"{path}: cannot parse config: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return data


class HfArgumentParser(ArgumentParser):
    """
    argparse built from dataclass type hints, with an optional --config document

    precedence is command line > config file > dataclass defaults; the document may be flat or
    grouped by dataclass name, e.g. {"MeasureConfig": {"delta": 0.5}}. Each dataclass with an
    `_argument_group_name` becomes an argument group.
    """

    dataclass_types: List[DataClassType]

    def __init__(self, dataclass_types: Union[DataClassType, Iterable[DataClassType]],
                 commands: Optional[Sequence[str]] = None, **kwargs):
        if "formatter_class" not in kwargs:
            kwargs["formatter_class"] = ArgumentDefaultsHelpFormatter
        super().__init__(**kwargs)
        if dataclasses.is_dataclass(dataclass_types):
            dataclass_types = [dataclass_types]
        self.dataclass_types = list(dataclass_types)
        self._field_types: Dict[str, Any] = {}
        if commands is not None:
            self.add_argument("command", choices=list(commands), help="pipeline stage to run")
        self.add_argument(f"--{CONFIG_FLAG}", default=None, help="JSON or YAML config document")
        for dtype in self.dataclass_types:
            self._add_dataclass_arguments(dtype)

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")

    def _parse_dataclass_field(self, parser, field: dataclasses.Field):
        kwargs = dict(field.metadata)
        aliases = kwargs.pop("aliases", [])
        if isinstance(aliases, str):
            aliases = [aliases]
        field_type = _unwrap_optional(field.type)
        origin = getattr(field_type, "__origin__", field_type)
        if field.name in self._field_types:
            raise ValueError(f"argument '{field.name}' declared twice")
        self._field_types[field.name] = field_type

        # defaults are applied after the config file is merged, so argparse must not fill them in
        kwargs["default"] = SUPPRESS
        if field.default is not dataclasses.MISSING:
            kwargs["help"] = f"{kwargs.get('help', '')} (default: {field.default})".strip()

        if origin is Literal or (isclass(field_type) and issubclass(field_type, Enum)):
            choices = list(field_type.__args__) if origin is Literal else [x.value for x in field_type]
            kwargs["choices"] = choices
            kwargs["type"] = make_choice_type_function(choices)
        elif field_type is bool:
            kwargs["type"] = string_to_bool
            kwargs["nargs"] = "?"
            kwargs["const"] = True
        elif isclass(origin) and issubclass(origin, list):
            kwargs["type"] = field_type.__args__[0]
            kwargs["nargs"] = "+"
        else:
            kwargs["type"] = field_type
        parser.add_argument(f"--{field.name}", *aliases, **kwargs)

        if field_type is bool and field.default is True:
            parser.add_argument(f"--no_{field.name}", action="store_false", dest=field.name, default=SUPPRESS,
                                help=f"disable --{field.name}")

    def _add_dataclass_arguments(self, dtype: DataClassType):
        if hasattr(dtype, "_argument_group_name"):
            parser = self.add_argument_group(dtype._argument_group_name)
        else:
            parser = self
        type_hints: Dict[str, type] = get_type_hints(dtype)
        for field in dataclasses.fields(dtype):
            if not field.init:
                continue
            field.type = type_hints[field.name]
            self._parse_dataclass_field(parser, field)

    def _flatten(self, document: Dict[str, Any]) -> Dict[str, Any]:
        groups = {dtype.__name__: dtype for dtype in self.dataclass_types}
        flat: Dict[str, Any] = {}
        for key, value in document.items():
            if key in groups and isinstance(value, dict):
                known = {f.name for f in dataclasses.fields(groups[key]) if f.init}
                for inner, inner_value in value.items():
                    if inner not in known:
                        raise ConfigError(f"unknown config key '{key}.{inner}'")
                    flat[inner] = inner_value
            elif key in self._field_types:
                flat[key] = value
            else:
                raise ConfigError(f"unknown config key '{key}'")
        return flat

    def _coerce(self, name: str, value: Any) -> Any:
        field_type = self._field_types[name]
        origin = getattr(field_type, "__origin__", field_type)
        if value is None:
            return None
        if isclass(origin) and issubclass(origin, list):
            if not isinstance(value, list):
                value = [value]
            return [field_type.__args__[0](v) for v in value]
        if origin is Literal:
            if value not in field_type.__args__:
                raise ConfigError(f"{name} must be one of {list(field_type.__args__)}, got {value!r}")
            return value
        if field_type is bool:
            return string_to_bool(value) if isinstance(value, str) else bool(value)
        try:
            return field_type(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: cannot read {value!r} as {getattr(field_type, '__name__', field_type)}")

    def resolve(self, args: Optional[Sequence[str]] = None) -> Tuple[Namespace, Dict[str, Any], Dict[str, Any]]:
        """
        Returns:
            parsed namespace, values from the config file, values given on the command line
        """
        namespace = self.parse_args(args=args)
        file_values = {}
        config_path = getattr(namespace, CONFIG_FLAG, None)
        if config_path:
            file_values = {k: self._coerce(k, v) for k, v in self._flatten(load_config_file(config_path)).items()}
        cli_values = {k: v for k, v in vars(namespace).items() if k in self._field_types}
        return namespace, file_values, cli_values

    def parse_args_into_dataclasses(self, args: Optional[Sequence[str]] = None) -> Tuple[Any, ...]:
        """
        Returns:
            the dataclass instances in declaration order, then a namespace with the remaining
            arguments (command, config)
        """
        namespace, file_values, cli_values = self.resolve(args)
        merged = {**file_values, **cli_values}
        outputs = []
        for dtype in self.dataclass_types:
            keys = {f.name for f in dataclasses.fields(dtype) if f.init}
            outputs.append(dtype(**{k: v for k, v in merged.items() if k in keys}))
            for k in keys:
                if hasattr(namespace, k):
                    delattr(namespace, k)
        outputs.append(namespace)
        return tuple(outputs)

    def parse_dict(self, values: Dict[str, Any]) -> Tuple[DataClass, ...]:
        """
        build the dataclasses from a flat or grouped mapping alone
        """
        flat = {k: self._coerce(k, v) for k, v in self._flatten(values).items()}
        outputs = []
        for dtype in self.dataclass_types:
            keys = {f.name for f in dataclasses.fields(dtype) if f.init}
            outputs.append(dtype(**{k: v for k, v in flat.items() if k in keys}))
        return tuple(outputs)
